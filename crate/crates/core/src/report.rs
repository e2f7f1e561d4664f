//! End-to-end audit of a scenario: findings, estimates and their biases.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::bias::{detect_biases, target_of, BiasError, BiasFinding, BiasKind};
use crate::estimate::{
    begg_greenes, bias_report, conditional_covariance, correct_for_known_reference, standardized_accuracy,
    stratified_accuracy, AccuracyEstimate, BiasReport, Correction, EstimateError, Observations, Provenance,
    VerificationData,
};
use crate::graph::{AdjustmentSets, NodeRole};
use crate::prob::{Dataset, JointTable, ProbError};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Simulate { n: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("simulation needs at least one row")]
    NoRows,
}

/// One estimate compared with the estimate it should have matched.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRow {
    pub estimate: String,
    pub reference: String,
    pub bias: BiasReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceDiagnostic {
    pub tests: [String; 2],
    pub given: String,
    pub given_present: f64,
    pub given_absent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationDiagnostic {
    pub selection: String,
    pub fraction_index_positive: Option<f64>,
    pub fraction_index_negative: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub conditional_covariance: Option<CovarianceDiagnostic>,
    pub verification: Option<VerificationDiagnostic>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub description: String,
    pub mode: Mode,
    pub findings: Vec<BiasFinding>,
    pub estimates: Vec<AccuracyEstimate>,
    pub bias_table: Vec<BiasRow>,
    pub diagnostics: Diagnostics,
}

impl ScenarioReport {
    pub fn estimate(&self, provenance: &Provenance) -> Option<&AccuracyEstimate> {
        self.estimates.iter().find(|e| &e.provenance == provenance)
    }
}

/// What the naive analysis sees: the exact joint or sampled rows.
#[derive(Clone)]
enum Source {
    Exact(JointTable),
    Sampled(Dataset),
}

impl Source {
    fn restrict(&self, evidence: &[(&str, u8)]) -> Result<Source, EstimateError> {
        if evidence.is_empty() {
            return Ok(self.clone());
        }
        Ok(match self {
            Source::Exact(j) => Source::Exact(j.restrict(evidence)?.0),
            Source::Sampled(d) => Source::Sampled(d.restrict(evidence)?.0),
        })
    }

    fn accuracy(&self, index: &str, truth: &str) -> Result<AccuracyEstimate, EstimateError> {
        match self {
            Source::Exact(j) => j.accuracy(index, truth),
            Source::Sampled(d) => d.accuracy(index, truth),
        }
    }

    fn stratified(&self, index: &str, truth: &str, stratum: &str) -> Result<Vec<AccuracyEstimate>, EstimateError> {
        let map = match self {
            Source::Exact(j) => stratified_accuracy(j, index, truth, stratum)?,
            Source::Sampled(d) => stratified_accuracy(d, index, truth, stratum)?,
        };
        Ok(map.into_values().collect())
    }

    fn standardized(&self, index: &str, truth: &str, stratum: &str) -> Result<AccuracyEstimate, EstimateError> {
        match self {
            Source::Exact(j) => standardized_accuracy(j, index, truth, stratum),
            Source::Sampled(d) => standardized_accuracy(d, index, truth, stratum),
        }
    }

    fn crosstab(&self, index: &str, truth: &str) -> Result<crate::estimate::CrossTab2x2, EstimateError> {
        match self {
            Source::Exact(j) => j.crosstab(index, truth),
            Source::Sampled(d) => d.crosstab(index, truth),
        }
    }

    fn n(&self) -> Option<u64> {
        match self {
            Source::Exact(_) => None,
            Source::Sampled(d) => Some(d.n_rows() as u64),
        }
    }

    fn verification(&self, index: &str, reference: &str, selection: &str) -> Result<VerificationData, EstimateError> {
        match self {
            Source::Exact(j) => VerificationData::from_joint(j, index, reference, selection),
            Source::Sampled(d) => {
                let t = d.column(index)?;
                let r = d.column(reference)?;
                let v = d.column(selection)?;
                Ok(VerificationData::from_observations(
                    (0..d.n_rows()).map(|i| (t[i], (v[i] == 1).then_some(r[i]))),
                ))
            }
        }
    }

    fn joint(&self) -> Result<JointTable, ProbError> {
        match self {
            Source::Exact(j) => Ok(j.clone()),
            Source::Sampled(d) => d.empirical_joint(),
        }
    }
}

struct Builder {
    estimates: Vec<AccuracyEstimate>,
    rows: Vec<BiasRow>,
}

impl Builder {
    fn push(&mut self, est: AccuracyEstimate) {
        if !self.estimates.iter().any(|e| e.provenance == est.provenance) {
            self.estimates.push(est);
        }
    }

    fn compare(&mut self, est: &AccuracyEstimate, reference: &AccuracyEstimate) {
        self.rows.push(BiasRow {
            estimate: est.provenance.to_string(),
            reference: reference.provenance.to_string(),
            bias: bias_report(reference, est),
        });
    }
}

/// Detects biases, then computes the true, naive, stratified and corrected
/// estimates the findings call for.
///
/// True estimates always come from exact enumeration. In simulate mode the
/// naive analysis and every correction use `n` rows sampled with `seed`.
pub fn run_scenario(s: &Scenario, mode: Mode) -> Result<ScenarioReport, ReportError> {
    s.validate()?;
    let dag = s.net.dag();
    let findings = detect_biases(dag, &s.spec)?;
    let has = |k: BiasKind| findings.iter().any(|f| f.kind == k);
    let d = target_of(dag).expect("roles validated");
    let index = s.spec.index.as_str();
    let proxy = s.spec.truth_proxy.as_str();

    let joint = s.net.exact_joint()?;
    let source = match mode {
        Mode::Exact => Source::Exact(joint.clone()),
        Mode::Simulate { n, seed } => {
            if n == 0 {
                return Err(ReportError::NoRows);
            }
            Source::Sampled(s.net.sample(n, seed)?)
        }
    };
    let mut diagnostics = Diagnostics::default();
    if let Mode::Simulate { .. } = mode {
        diagnostics
            .notes
            .push("true estimates come from exact enumeration; all others from the sampled rows".into());
    }

    let mut b = Builder {
        estimates: Vec::new(),
        rows: Vec::new(),
    };
    let truth = joint.accuracy(index, d)?.with_provenance(Provenance::True);
    b.push(truth.clone());

    let evidence: Vec<(&str, u8)> = s.spec.conditioned.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    let analysed = source.restrict(&evidence)?;
    let naive = analysed.accuracy(index, proxy)?;
    b.push(naive.clone());
    b.compare(&naive, &truth);

    // stratifiers: requested strata, spectrum covariates, single-node
    // adjustment sets
    let mut strata: BTreeSet<String> = s.spec.strata.clone();
    for f in &findings {
        match f.kind {
            BiasKind::SpectrumEffect => {
                strata.extend(f.nodes.iter().filter(|n| n.as_str() != index).cloned());
            }
            BiasKind::Confounding => match &f.adjustment {
                Some(AdjustmentSets::Sets(sets)) if sets.first().is_some_and(|s| s.len() == 1) => {
                    strata.extend(sets[0].iter().cloned());
                }
                Some(AdjustmentSets::Sets(sets)) if !sets.is_empty() => diagnostics.notes.push(format!(
                    "confounding needs joint adjustment for {:?}; single-variable stratification is not reported",
                    sets[0]
                )),
                _ => diagnostics
                    .notes
                    .push("confounding cannot be removed by stratifying on observed nodes".into()),
            },
            _ => {}
        }
    }
    for stratum in &strata {
        for est in analysed.stratified(index, proxy, stratum)? {
            let Provenance::Stratified { value, .. } = est.provenance else {
                unreachable!("stratified estimates carry their stratum")
            };
            let true_s = joint
                .restrict(&[(stratum, value)])?
                .0
                .accuracy(index, d)?
                .with_provenance(Provenance::TrueStratified {
                    stratum: stratum.clone(),
                    value,
                });
            b.push(true_s.clone());
            b.push(est.clone());
            b.compare(&est, &true_s);
        }
        if has(BiasKind::Confounding) {
            let std = analysed.standardized(index, proxy, stratum)?;
            b.push(std.clone());
            b.compare(&naive, &std);
        }
    }

    if has(BiasKind::PartialVerification) {
        let selections: Vec<&str> = evidence
            .iter()
            .filter(|(name, value)| *value == 1 && dag.node(name).is_ok_and(|n| n.role == NodeRole::Selection))
            .map(|(name, _)| *name)
            .collect();
        if let [v] = selections[..] {
            let data = source.verification(index, proxy, v)?;
            diagnostics.verification = Some(VerificationDiagnostic {
                selection: v.to_string(),
                fraction_index_positive: data.verified_fraction_pos(),
                fraction_index_negative: data.verified_fraction_neg(),
            });
            match begg_greenes(&data) {
                Ok(mut est) => {
                    est.n_effective = source.n();
                    b.push(est.clone());
                    b.compare(&est, &truth);
                }
                Err(e) => diagnostics
                    .notes
                    .push(format!("begg-greenes correction unavailable: {e}")),
            }
        } else {
            diagnostics
                .notes
                .push("begg-greenes needs exactly one selection node conditioned on 1".into());
        }
    }

    if has(BiasKind::ReferenceStandardError) {
        if let Some(k) = s.known_reference {
            match correct_for_known_reference(&analysed.crosstab(index, proxy)?, k.se, k.sp) {
                Ok(fit) => {
                    let mut est = fit.to_estimate();
                    est.n_effective = source.n();
                    b.push(est.clone());
                    b.compare(&est, &truth);
                    if !s.corrections.contains(&Correction::KnownReference) {
                        diagnostics.notes.push(
                            "known-reference correction shown for contrast only: it assumes the two tests are \
                             independent given the target, which this design violates"
                                .into(),
                        );
                    }
                }
                Err(e) => diagnostics
                    .notes
                    .push(format!("known-reference correction failed: {e}")),
            }
        }
    }

    if has(BiasKind::ConditionalDependence) {
        let cov = conditional_covariance(&source.joint()?, proxy, index, d)?;
        diagnostics.conditional_covariance = Some(CovarianceDiagnostic {
            tests: [proxy.to_string(), index.to_string()],
            given: d.to_string(),
            given_present: cov.given_present,
            given_absent: cov.given_absent,
        });
    }

    Ok(ScenarioReport {
        scenario: s.name.clone(),
        description: s.description.clone(),
        mode,
        findings,
        estimates: b.estimates,
        bias_table: b.rows,
        diagnostics,
    })
}

/// Runs every scenario in `scenarios` in order.
pub fn run_all(scenarios: &[Scenario], mode: Mode) -> Result<Vec<ScenarioReport>, ReportError> {
    scenarios.iter().map(|s| run_scenario(s, mode)).collect()
}
