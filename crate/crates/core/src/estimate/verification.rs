use serde::Serialize;

use super::{AccuracyEstimate, Correction, CrossTab2x2, EstimateError, Provenance};
use crate::prob::JointTable;

/// A cohort where every subject has an index result but only some have a
/// reference result. Counts may be integers or probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerificationData {
    /// Index (test) against reference (truth) among verified subjects.
    pub verified: CrossTab2x2,
    pub unverified_pos: f64,
    pub unverified_neg: f64,
}

impl VerificationData {
    /// Tallies `(index, reference)` pairs; a missing reference means the
    /// subject was not verified.
    pub fn from_observations<I>(rows: I) -> Self
    where
        I: IntoIterator<Item = (u8, Option<u8>)>,
    {
        let mut v = VerificationData {
            verified: CrossTab2x2 {
                a: 0.0,
                b: 0.0,
                c: 0.0,
                d: 0.0,
            },
            unverified_pos: 0.0,
            unverified_neg: 0.0,
        };
        for (t, r) in rows {
            match (t, r) {
                (1, Some(1)) => v.verified.a += 1.0,
                (1, Some(_)) => v.verified.b += 1.0,
                (_, Some(1)) => v.verified.c += 1.0,
                (_, Some(_)) => v.verified.d += 1.0,
                (1, None) => v.unverified_pos += 1.0,
                (_, None) => v.unverified_neg += 1.0,
            }
        }
        v
    }

    /// Exact cell probabilities from a joint containing the selection
    /// indicator (1 = verified).
    pub fn from_joint(
        joint: &JointTable,
        index: &str,
        reference: &str,
        selection: &str,
    ) -> Result<Self, EstimateError> {
        let p = |t: u8, r: u8| joint.prob(&[(index, t), (reference, r), (selection, 1)]);
        Ok(VerificationData {
            verified: CrossTab2x2 {
                a: p(1, 1)?,
                b: p(1, 0)?,
                c: p(0, 1)?,
                d: p(0, 0)?,
            },
            unverified_pos: joint.prob(&[(index, 1), (selection, 0)])?,
            unverified_neg: joint.prob(&[(index, 0), (selection, 0)])?,
        })
    }

    pub fn index_positive(&self) -> f64 {
        self.verified.a + self.verified.b + self.unverified_pos
    }

    pub fn index_negative(&self) -> f64 {
        self.verified.c + self.verified.d + self.unverified_neg
    }

    /// Fraction of index-positive subjects that were verified.
    pub fn verified_fraction_pos(&self) -> Option<f64> {
        let n = self.index_positive();
        (n > 0.0).then(|| (self.verified.a + self.verified.b) / n)
    }

    /// Fraction of index-negative subjects that were verified.
    pub fn verified_fraction_neg(&self) -> Option<f64> {
        let n = self.index_negative();
        (n > 0.0).then(|| (self.verified.c + self.verified.d) / n)
    }
}

/// Verification-bias correction under missing-at-random given the index
/// result: each verified row is reweighted by the inverse of the verified
/// fraction in its index stratum, and the metrics are computed on the
/// reweighted table. With full verification this is the plain estimate.
pub fn begg_greenes(data: &VerificationData) -> Result<AccuracyEstimate, EstimateError> {
    let v = &data.verified;
    let all = [v.a, v.b, v.c, v.d, data.unverified_pos, data.unverified_neg];
    if all.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(EstimateError::InvalidCount);
    }
    let n_pos = data.index_positive();
    let n_neg = data.index_negative();
    if n_pos + n_neg <= 0.0 {
        return Err(EstimateError::EmptyCohort);
    }
    let ver_pos = v.a + v.b;
    let ver_neg = v.c + v.d;
    if n_pos > 0.0 && ver_pos <= 0.0 {
        return Err(EstimateError::NoVerifiedPositives);
    }
    if n_neg > 0.0 && ver_neg <= 0.0 {
        return Err(EstimateError::NoVerifiedNegatives);
    }
    let w_pos = if n_pos > 0.0 { n_pos / ver_pos } else { 0.0 };
    let w_neg = if n_neg > 0.0 { n_neg / ver_neg } else { 0.0 };
    let weighted = CrossTab2x2 {
        a: v.a * w_pos,
        b: v.b * w_pos,
        c: v.c * w_neg,
        d: v.d * w_neg,
    };
    Ok(weighted.estimate(Provenance::Corrected(Correction::BeggGreenes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;
    use crate::prob::{BayesNet, Cpt};
    use alloc::vec;

    fn hpv_joint() -> JointTable {
        let dag = Dag::parse("dag { HPV PCR V HPV -> PCR PCR -> V }").unwrap();
        BayesNet::new(
            dag,
            vec![
                Cpt::root("HPV", 0.10),
                Cpt::test("PCR", "HPV", 0.90, 0.95),
                Cpt::new("V", &["PCR"], &[0.10, 1.0]),
            ],
        )
        .unwrap()
        .exact_joint()
        .unwrap()
    }

    #[test]
    fn recovers_truth_under_mar() {
        let data = VerificationData::from_joint(&hpv_joint(), "PCR", "HPV", "V").unwrap();
        let e = begg_greenes(&data).unwrap();
        assert!((e.se.unwrap() - 0.90).abs() < 1e-12);
        assert!((e.sp.unwrap() - 0.95).abs() < 1e-12);
        assert!((e.prevalence.unwrap() - 0.10).abs() < 1e-12);
        assert!((data.verified_fraction_pos().unwrap() - 1.0).abs() < 1e-12);
        assert!((data.verified_fraction_neg().unwrap() - 0.10).abs() < 1e-12);
    }

    #[test]
    fn verified_only_is_biased() {
        let data = VerificationData::from_joint(&hpv_joint(), "PCR", "HPV", "V").unwrap();
        let naive = data.verified.estimate(Provenance::Naive);
        // 0.09 / (0.09 + 0.001), 0.0855 / (0.0855 + 0.045)
        assert!((naive.se.unwrap() - 0.09 / 0.091).abs() < 1e-12);
        assert!((naive.sp.unwrap() - 0.0855 / 0.1305).abs() < 1e-12);
    }

    #[test]
    fn full_verification_is_identity() {
        let rows = [
            (1, Some(1)),
            (1, Some(0)),
            (0, Some(1)),
            (0, Some(0)),
            (0, Some(0)),
            (1, Some(1)),
        ];
        let data = VerificationData::from_observations(rows);
        let bg = begg_greenes(&data).unwrap();
        let plain = data.verified.estimate(Provenance::Naive);
        assert_eq!(bg.se, plain.se);
        assert_eq!(bg.sp, plain.sp);
        assert_eq!(bg.ppv, plain.ppv);
        assert_eq!(bg.npv, plain.npv);
    }

    #[test]
    fn missing_verified_negatives_is_an_error() {
        let data = VerificationData::from_observations([(1, Some(1)), (1, Some(0)), (0, None)]);
        assert_eq!(begg_greenes(&data), Err(EstimateError::NoVerifiedNegatives));
        let data = VerificationData::from_observations([(0, Some(1)), (1, None)]);
        assert_eq!(begg_greenes(&data), Err(EstimateError::NoVerifiedPositives));
    }
}
