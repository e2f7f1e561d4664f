use serde::Serialize;

use super::{AccuracyEstimate, Correction, CrossTab2x2, EstimateError, Provenance};

/// Slack allowed on solved probabilities before they count as inconsistent.
const SOLVE_TOLERANCE: f64 = 1e-12;

/// Prevalence and index accuracy recovered from an imperfect reference with
/// known operating characteristics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KnownReferenceFit {
    pub prevalence: f64,
    pub se2: f64,
    pub sp2: f64,
}

impl KnownReferenceFit {
    pub fn to_estimate(&self) -> AccuracyEstimate {
        AccuracyEstimate::from_operating_point(
            self.se2,
            self.sp2,
            self.prevalence,
            Provenance::Corrected(Correction::KnownReference),
        )
    }
}

fn probability(name: &'static str, value: f64) -> Result<f64, EstimateError> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(EstimateError::InvalidProbability { name, value })
    }
}

/// Inverts the two-test conditional-independence model when the reference
/// test's sensitivity `se1` and specificity `sp1` are known.
///
/// `obs` is the index test (T2) against the reference (T1), in the
/// orientation of [`CrossTab2x2`]: `a` = P(T2+, T1+), `b` = P(T2+, T1-),
/// `c` = P(T2-, T1+), `d` = P(T2-, T1-). Counts are normalized first.
///
/// The prevalence comes from the reference margin,
/// `p = (P(T1+) - (1 - sp1)) / (se1 + sp1 - 1)`, and `(se2, 1 - sp2)` solve
///
/// ```text
/// P(T1+, T2+) = p se1 se2       + (1 - p)(1 - sp1)(1 - sp2)
/// P(T1-, T2+) = p (1 - se1) se2 + (1 - p) sp1 (1 - sp2)
/// ```
pub fn correct_for_known_reference(obs: &CrossTab2x2, se1: f64, sp1: f64) -> Result<KnownReferenceFit, EstimateError> {
    let se1 = probability("se1", se1)?;
    let sp1 = probability("sp1", sp1)?;
    let youden = se1 + sp1 - 1.0;
    if youden <= 1e-9 {
        return Err(EstimateError::UninformativeReference(youden));
    }
    let obs = obs.normalized()?;
    let both_pos = obs.a;
    let ref_neg_idx_pos = obs.b;
    let ref_pos = obs.a + obs.c;

    let p = (ref_pos - (1.0 - sp1)) / youden;
    let det = p * (1.0 - p) * youden;
    let se2 = (both_pos * (1.0 - p) * sp1 - (1.0 - p) * (1.0 - sp1) * ref_neg_idx_pos) / det;
    let fp2 = (p * se1 * ref_neg_idx_pos - p * (1.0 - se1) * both_pos) / det;
    let sp2 = 1.0 - fp2;

    let inside = |v: f64| v.is_finite() && (-SOLVE_TOLERANCE..=1.0 + SOLVE_TOLERANCE).contains(&v);
    if !(p > 0.0 && p < 1.0) || !inside(se2) || !inside(sp2) {
        return Err(EstimateError::Inconsistent {
            prevalence: p,
            se2,
            sp2,
        });
    }
    Ok(KnownReferenceFit {
        prevalence: p,
        se2: se2.clamp(0.0, 1.0),
        sp2: sp2.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Index-vs-reference table implied by the two-test CI model.
    fn forward(p: f64, se1: f64, sp1: f64, se2: f64, sp2: f64) -> CrossTab2x2 {
        CrossTab2x2 {
            a: p * se1 * se2 + (1.0 - p) * (1.0 - sp1) * (1.0 - sp2),
            b: p * (1.0 - se1) * se2 + (1.0 - p) * sp1 * (1.0 - sp2),
            c: p * se1 * (1.0 - se2) + (1.0 - p) * (1.0 - sp1) * sp2,
            d: p * (1.0 - se1) * (1.0 - se2) + (1.0 - p) * sp1 * sp2,
        }
    }

    #[test]
    fn inverts_tuberculosis_cells() {
        let obs = CrossTab2x2 {
            a: 0.0729,
            b: 0.0621,
            c: 0.0251,
            d: 0.8399,
        };
        let fit = correct_for_known_reference(&obs, 0.80, 0.98).unwrap();
        assert!((fit.prevalence - 0.10).abs() < 1e-9);
        assert!((fit.se2 - 0.90).abs() < 1e-9);
        assert!((fit.sp2 - 0.95).abs() < 1e-9);
    }

    #[test]
    fn perfect_reference_returns_naive() {
        let obs = forward(0.3, 0.8, 0.9, 0.7, 0.85);
        let fit = correct_for_known_reference(&obs, 1.0, 1.0).unwrap();
        let naive = obs.estimate(Provenance::Naive);
        assert!((fit.se2 - naive.se.unwrap()).abs() < 1e-12);
        assert!((fit.sp2 - naive.sp.unwrap()).abs() < 1e-12);
        assert!((fit.prevalence - naive.prevalence.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn uninformative_reference_is_rejected() {
        let obs = forward(0.3, 0.8, 0.9, 0.7, 0.85);
        assert!(matches!(
            correct_for_known_reference(&obs, 0.5, 0.5),
            Err(EstimateError::UninformativeReference(_))
        ));
        assert!(matches!(
            correct_for_known_reference(&obs, 1.2, 0.5),
            Err(EstimateError::InvalidProbability { name: "se1", .. })
        ));
    }

    #[test]
    fn understated_reference_specificity_is_inconsistent() {
        // the reference positive rate (0.114) is below 1 - sp1, so p < 0
        let obs = forward(0.02, 0.8, 0.9, 0.9, 0.95);
        assert!(matches!(
            correct_for_known_reference(&obs, 0.8, 0.85),
            Err(EstimateError::Inconsistent { .. })
        ));
    }

    #[test]
    fn round_trip_small_grid() {
        for p in [0.05, 0.3, 0.95] {
            for (se1, sp1) in [(0.6, 0.5), (0.8, 0.98), (1.0, 0.7)] {
                let obs = forward(p, se1, sp1, 0.75, 0.65);
                let fit = correct_for_known_reference(&obs, se1, sp1).unwrap();
                assert!((fit.prevalence - p).abs() < 1e-9);
                assert!((fit.se2 - 0.75).abs() < 1e-9);
                assert!((fit.sp2 - 0.65).abs() < 1e-9);
            }
        }
    }
}
