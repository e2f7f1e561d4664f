//! Diagnostic accuracy estimates from exact joints or sampled data, and the
//! standard corrections.
//!
//! Exact-mode estimates (from a [`JointTable`]) carry no interval; sampled
//! estimates (from a [`Dataset`]) carry Wilson 95% intervals for Se and Sp.
//! A metric whose denominator is zero on sampled data is `None`, never a
//! placeholder number.

mod known_reference;
mod lca;
mod verification;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use core::fmt;

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::prob::{Dataset, JointTable, ProbError};

pub use known_reference::{correct_for_known_reference, KnownReferenceFit};
pub use lca::{lca_em, LcaOptions, LcaRestart, LcaResult, PatternCounts, TestAccuracy};
pub use verification::{begg_greenes, VerificationData};

/// Normal quantile used for every Wilson interval.
pub const WILSON_Z: f64 = 1.960;

/// Differences smaller than this are reported as no bias.
pub const BIAS_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error("`{truth}` has a degenerate margin (P({truth}=1) is 0 or 1)")]
    DegenerateTruth { truth: String },
    #[error("stratum {stratum}={value} is empty")]
    EmptyStratum { stratum: String, value: u8 },
    #[error("no verified index-positive subjects")]
    NoVerifiedPositives,
    #[error("no verified index-negative subjects: verification correction is undefined without further assumptions")]
    NoVerifiedNegatives,
    #[error("cohort is empty")]
    EmptyCohort,
    #[error("counts must be finite and non-negative")]
    InvalidCount,
    #[error("`{name}` = {value} is not a probability")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("reference is uninformative (se1 + sp1 - 1 = {0} must exceed 1e-9)")]
    UninformativeReference(f64),
    #[error(
        "model inconsistent with inputs (CI violated or wrong se1/sp1): prevalence {prevalence}, se2 {se2}, sp2 {sp2}"
    )]
    Inconsistent { prevalence: f64, se2: f64, sp2: f64 },
    #[error(
        "latent class model with {tests} tests is not identifiable (2K+1 parameters, 2^K-1 degrees of freedom); \
         use at least 3 tests, or the known-reference correction for 2 tests"
    )]
    Underidentified { tests: usize },
    #[error("pattern table has {found} cells, expected {expected}")]
    PatternTable { expected: usize, found: usize },
}

/// Where an estimate came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Index test against the target condition itself.
    True,
    /// Against the target condition within one level of a stratifying
    /// variable.
    TrueStratified {
        stratum: String,
        value: u8,
    },
    /// Index test against the analysis' truth proxy, with its conditioning.
    Naive,
    /// Within one level of a stratifying variable.
    Stratified {
        stratum: String,
        value: u8,
    },
    /// Stratum-specific Se/Sp averaged over the stratum distribution.
    Standardized {
        stratum: String,
    },
    Corrected(Correction),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::True => f.write_str("true"),
            Provenance::TrueStratified { stratum, value } => write!(f, "true({stratum}={value})"),
            Provenance::Naive => f.write_str("naive"),
            Provenance::Stratified { stratum, value } => write!(f, "stratified({stratum}={value})"),
            Provenance::Standardized { stratum } => write!(f, "standardized({stratum})"),
            Provenance::Corrected(c) => write!(f, "corrected({})", c.id()),
        }
    }
}

impl Serialize for Provenance {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Correction {
    BeggGreenes,
    KnownReference,
    LatentClass,
    Stratification,
}

impl Correction {
    pub fn id(self) -> &'static str {
        match self {
            Correction::BeggGreenes => "begg-greenes",
            Correction::KnownReference => "known-reference",
            Correction::LatentClass => "lca",
            Correction::Stratification => "stratification",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        Some(match s {
            "begg-greenes" => Correction::BeggGreenes,
            "known-reference" => Correction::KnownReference,
            "lca" => Correction::LatentClass,
            "stratification" => Correction::Stratification,
            _ => return None,
        })
    }
}

impl Serialize for Correction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intervals {
    pub se: Option<(f64, f64)>,
    pub sp: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyEstimate {
    pub se: Option<f64>,
    pub sp: Option<f64>,
    pub ppv: Option<f64>,
    pub npv: Option<f64>,
    pub prevalence: Option<f64>,
    pub provenance: Provenance,
    /// `None` for exact (enumerated) estimates.
    pub n_effective: Option<u64>,
    pub ci: Option<Intervals>,
}

impl AccuracyEstimate {
    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Builds an estimate from Se, Sp and prevalence, deriving predictive
    /// values by Bayes' rule.
    pub fn from_operating_point(se: f64, sp: f64, prevalence: f64, provenance: Provenance) -> Self {
        let pos = se * prevalence + (1.0 - sp) * (1.0 - prevalence);
        let neg = 1.0 - pos;
        AccuracyEstimate {
            se: Some(se),
            sp: Some(sp),
            ppv: ratio(se * prevalence, pos),
            npv: ratio(sp * (1.0 - prevalence), neg),
            prevalence: Some(prevalence),
            provenance,
            n_effective: None,
            ci: None,
        }
    }
}

impl Serialize for AccuracyEstimate {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum NEff {
            Exact(&'static str),
            Count(u64),
        }
        let mut st = s.serialize_struct("AccuracyEstimate", 8)?;
        st.serialize_field("se", &self.se)?;
        st.serialize_field("sp", &self.sp)?;
        st.serialize_field("ppv", &self.ppv)?;
        st.serialize_field("npv", &self.npv)?;
        st.serialize_field("prevalence", &self.prevalence)?;
        st.serialize_field("provenance", &self.provenance)?;
        st.serialize_field("ci", &self.ci)?;
        st.serialize_field(
            "n_effective",
            &match self.n_effective {
                Some(n) => NEff::Count(n),
                None => NEff::Exact("exact"),
            },
        )?;
        st.end()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Wilson score interval for `successes / n` at [`WILSON_Z`].
pub fn wilson_interval(successes: f64, n: f64) -> Option<(f64, f64)> {
    if n <= 0.0 {
        return None;
    }
    let z2 = WILSON_Z * WILSON_Z;
    let p = successes / n;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
    Some(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Index test against a truth variable, as probabilities or counts.
///
/// `a` = (test+, truth+), `b` = (test+, truth-), `c` = (test-, truth+),
/// `d` = (test-, truth-).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossTab2x2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl CrossTab2x2 {
    pub fn total(&self) -> f64 {
        self.a + self.b + self.c + self.d
    }

    fn check(&self) -> Result<(), EstimateError> {
        if [self.a, self.b, self.c, self.d]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            Ok(())
        } else {
            Err(EstimateError::InvalidCount)
        }
    }

    pub fn normalized(&self) -> Result<CrossTab2x2, EstimateError> {
        self.check()?;
        let t = self.total();
        if t <= 0.0 {
            return Err(EstimateError::EmptyCohort);
        }
        Ok(CrossTab2x2 {
            a: self.a / t,
            b: self.b / t,
            c: self.c / t,
            d: self.d / t,
        })
    }

    /// Plug-in metrics; `None` where a denominator is zero.
    pub fn estimate(&self, provenance: Provenance) -> AccuracyEstimate {
        let CrossTab2x2 { a, b, c, d } = *self;
        AccuracyEstimate {
            se: ratio(a, a + c),
            sp: ratio(d, b + d),
            ppv: ratio(a, a + b),
            npv: ratio(d, c + d),
            prevalence: ratio(a + c, self.total()),
            provenance,
            n_effective: None,
            ci: None,
        }
    }
}

/// A source of accuracy estimates: an exact joint or a sampled dataset.
pub trait Observations: Sized {
    /// The index-vs-truth table over all rows.
    fn crosstab(&self, index: &str, truth: &str) -> Result<CrossTab2x2, EstimateError>;

    /// Restricts to rows matching the evidence; also returns the fraction
    /// of mass kept.
    fn restrict(&self, evidence: &[(&str, u8)]) -> Result<(Self, f64), EstimateError>;

    fn accuracy(&self, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError>;
}

impl Observations for JointTable {
    fn crosstab(&self, index: &str, truth: &str) -> Result<CrossTab2x2, EstimateError> {
        let m = self.marginal(&[index, truth])?;
        // marginal keeps the table's order; cells are (first, second)
        let index_first = m.variables()[0] == index;
        let cell = |t: usize, r: usize| {
            if index_first {
                m.mass()[t * 2 + r]
            } else {
                m.mass()[r * 2 + t]
            }
        };
        Ok(CrossTab2x2 {
            a: cell(1, 1),
            b: cell(1, 0),
            c: cell(0, 1),
            d: cell(0, 0),
        })
    }

    fn restrict(&self, evidence: &[(&str, u8)]) -> Result<(Self, f64), EstimateError> {
        Ok(self.condition(evidence)?)
    }

    /// `accuracy_vs`: exact Se, Sp, PPV, NPV and prevalence of `index`
    /// against `truth`. Provenance defaults to naive.
    fn accuracy(&self, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError> {
        let tab = self.crosstab(index, truth)?;
        let est = tab.estimate(Provenance::Naive);
        if est.se.is_none() || est.sp.is_none() {
            return Err(EstimateError::DegenerateTruth {
                truth: truth.to_string(),
            });
        }
        Ok(est)
    }
}

impl Observations for Dataset {
    fn crosstab(&self, index: &str, truth: &str) -> Result<CrossTab2x2, EstimateError> {
        let t = self.column(index)?;
        let r = self.column(truth)?;
        let mut cells = [0u64; 4];
        for (&t, &r) in t.iter().zip(r) {
            cells[(t as usize) * 2 + r as usize] += 1;
        }
        Ok(CrossTab2x2 {
            a: cells[3] as f64,
            b: cells[2] as f64,
            c: cells[1] as f64,
            d: cells[0] as f64,
        })
    }

    fn restrict(&self, evidence: &[(&str, u8)]) -> Result<(Self, f64), EstimateError> {
        let n = self.n_rows();
        let kept = self.filter(evidence)?;
        let frac = if n == 0 { 0.0 } else { kept.n_rows() as f64 / n as f64 };
        Ok((kept, frac))
    }

    /// `accuracy_from_data`: plug-in frequencies with Wilson intervals.
    fn accuracy(&self, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError> {
        let tab = self.crosstab(index, truth)?;
        let mut est = tab.estimate(Provenance::Naive);
        est.n_effective = Some(self.n_rows() as u64);
        est.ci = Some(Intervals {
            se: wilson_interval(tab.a, tab.a + tab.c),
            sp: wilson_interval(tab.d, tab.b + tab.d),
        });
        Ok(est)
    }
}

/// Exact accuracy of `index` against `truth`.
pub fn accuracy_vs(joint: &JointTable, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError> {
    joint.accuracy(index, truth)
}

/// Plug-in accuracy of `index` against `truth` from observed rows.
pub fn accuracy_from_data(data: &Dataset, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError> {
    data.accuracy(index, truth)
}

/// Per-level accuracy within each value of `stratum`.
pub fn stratified_accuracy<O: Observations>(
    obs: &O,
    index: &str,
    truth: &str,
    stratum: &str,
) -> Result<BTreeMap<u8, AccuracyEstimate>, EstimateError> {
    let mut out = BTreeMap::new();
    for value in [0u8, 1] {
        let (sub, frac) = match obs.restrict(&[(stratum, value)]) {
            Ok(r) => r,
            Err(EstimateError::Prob(ProbError::ZeroProbability)) => {
                return Err(EstimateError::EmptyStratum {
                    stratum: stratum.to_string(),
                    value,
                })
            }
            Err(e) => return Err(e),
        };
        if frac <= 0.0 {
            return Err(EstimateError::EmptyStratum {
                stratum: stratum.to_string(),
                value,
            });
        }
        let est = sub.accuracy(index, truth)?.with_provenance(Provenance::Stratified {
            stratum: stratum.to_string(),
            value,
        });
        out.insert(value, est);
    }
    Ok(out)
}

/// Stratum-specific Se and Sp averaged with weights `P(stratum = s)`;
/// prevalence is the crude one and predictive values follow by Bayes' rule.
pub fn standardized_accuracy<O: Observations>(
    obs: &O,
    index: &str,
    truth: &str,
    stratum: &str,
) -> Result<AccuracyEstimate, EstimateError> {
    let strata = stratified_accuracy(obs, index, truth, stratum)?;
    let (_, w1) = obs.restrict(&[(stratum, 1)])?;
    let weights = [1.0 - w1, w1];
    let mut se = 0.0;
    let mut sp = 0.0;
    for (value, est) in &strata {
        let w = weights[*value as usize];
        se += w * est.se.ok_or_else(|| degenerate(truth))?;
        sp += w * est.sp.ok_or_else(|| degenerate(truth))?;
    }
    let crude = obs.crosstab(index, truth)?.estimate(Provenance::Naive);
    let prevalence = crude.prevalence.ok_or(EstimateError::EmptyCohort)?;
    Ok(AccuracyEstimate::from_operating_point(
        se,
        sp,
        prevalence,
        Provenance::Standardized {
            stratum: stratum.to_string(),
        },
    ))
}

fn degenerate(truth: &str) -> EstimateError {
    EstimateError::DegenerateTruth {
        truth: truth.to_string(),
    }
}

/// Qualitative direction of a metric difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasDirection {
    Over,
    Under,
    None,
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricBias {
    /// `other - reference`
    pub diff: Option<f64>,
    pub direction: BiasDirection,
}

impl MetricBias {
    fn between(reference: Option<f64>, other: Option<f64>) -> Self {
        match (reference, other) {
            (Some(r), Some(o)) => {
                let diff = o - r;
                let direction = if diff > BIAS_THRESHOLD {
                    BiasDirection::Over
                } else if diff < -BIAS_THRESHOLD {
                    BiasDirection::Under
                } else {
                    BiasDirection::None
                };
                MetricBias {
                    diff: Some(diff),
                    direction,
                }
            }
            _ => MetricBias {
                diff: None,
                direction: BiasDirection::Undefined,
            },
        }
    }
}

/// Signed per-metric differences `other - reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasReport {
    pub se: MetricBias,
    pub sp: MetricBias,
    pub ppv: MetricBias,
    pub npv: MetricBias,
    pub prevalence: MetricBias,
}

pub fn bias_report(reference: &AccuracyEstimate, other: &AccuracyEstimate) -> BiasReport {
    BiasReport {
        se: MetricBias::between(reference.se, other.se),
        sp: MetricBias::between(reference.sp, other.sp),
        ppv: MetricBias::between(reference.ppv, other.ppv),
        npv: MetricBias::between(reference.npv, other.npv),
        prevalence: MetricBias::between(reference.prevalence, other.prevalence),
    }
}

/// Within-stratum covariance of two tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionalCovariance {
    /// `cov(t1, t2 | d = 1)`
    pub given_present: f64,
    /// `cov(t1, t2 | d = 0)`
    pub given_absent: f64,
}

/// `cov(t1, t2 | d) = P(t1=1, t2=1 | d) - P(t1=1 | d) P(t2=1 | d)` for
/// both values of `d`.
pub fn conditional_covariance(
    joint: &JointTable,
    t1: &str,
    t2: &str,
    d: &str,
) -> Result<ConditionalCovariance, EstimateError> {
    let mut cov = [0.0; 2];
    for value in [0u8, 1] {
        let (sub, _) = joint.condition(&[(d, value)]).map_err(|e| match e {
            ProbError::ZeroProbability => EstimateError::EmptyStratum {
                stratum: d.to_string(),
                value,
            },
            other => other.into(),
        })?;
        let both = sub.prob(&[(t1, 1), (t2, 1)])?;
        cov[value as usize] = both - sub.prob(&[(t1, 1)])? * sub.prob(&[(t2, 1)])?;
    }
    Ok(ConditionalCovariance {
        given_present: cov[1],
        given_absent: cov[0],
    })
}

/// Formats an optional metric with five decimals, `-` when undefined.
pub fn fmt_metric(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.5}"),
        None => "-".to_string(),
    }
}
