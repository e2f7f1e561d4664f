//! Built-in study designs.
//!
//! Every probability below is an illustrative default chosen to make the
//! structure visible; none is an empirical estimate.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bias::{detect_biases, validate_roles, AnalysisSpec, BiasError, BiasKind, RoleError};
use crate::estimate::Correction;
use crate::graph::Dag;
use crate::prob::{BayesNet, Cpt, ProbError};

/// Reference-test accuracy the analyst claims to know.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnownReference {
    pub se: f64,
    pub sp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub net: BayesNet,
    pub spec: AnalysisSpec,
    /// In detection order.
    pub expected_findings: Vec<BiasKind>,
    pub corrections: Vec<Correction>,
    pub known_reference: Option<KnownReference>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error("invalid roles: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Roles(Vec<RoleError>),
    #[error("known reference {name} = {value} is not a probability")]
    KnownReference { name: &'static str, value: f64 },
}

impl Scenario {
    /// Checks roles, the analysis spec and the declared reference accuracy.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        validate_roles(self.net.dag()).map_err(ScenarioError::Roles)?;
        self.spec.validate(self.net.dag())?;
        if let Some(k) = self.known_reference {
            for (name, value) in [("se", k.se), ("sp", k.sp)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(ScenarioError::KnownReference { name, value });
                }
            }
        }
        Ok(())
    }

    /// Detected kinds, to compare with [`Scenario::expected_findings`].
    pub fn detected_kinds(&self) -> Result<Vec<BiasKind>, ScenarioError> {
        Ok(detect_biases(self.net.dag(), &self.spec)?
            .into_iter()
            .map(|f| f.kind)
            .collect())
    }
}

#[allow(clippy::too_many_arguments)]
fn build(
    name: &str,
    description: &str,
    dag: &str,
    cpts: Vec<Cpt>,
    spec: AnalysisSpec,
    expected_findings: Vec<BiasKind>,
    corrections: Vec<Correction>,
    known_reference: Option<KnownReference>,
) -> Scenario {
    let dag = Dag::parse(dag).expect("builtin graph parses");
    Scenario {
        name: name.to_string(),
        description: description.to_string(),
        net: BayesNet::new(dag, cpts).expect("builtin network is valid"),
        spec,
        expected_findings,
        corrections,
        known_reference,
    }
}

fn ptb_imperfect_reference() -> Scenario {
    build(
        "ptb-imperfect-reference",
        "Imperfect reference standard. Culture (Se 0.80, Sp 0.98) is scored as if it were the true \
         pulmonary tuberculosis status while evaluating GeneXpert (Se 0.90, Sp 0.95); prevalence 0.10. \
         The latent disease opens the path Culture <- PTB -> GeneXpert.",
        "dag {
            PTB [role=target, latent]
            Culture [role=reference]
            GeneXpert [role=index]
            PTB -> Culture
            PTB -> GeneXpert
        }",
        vec![
            Cpt::root("PTB", 0.10),
            Cpt::test("Culture", "PTB", 0.80, 0.98),
            Cpt::test("GeneXpert", "PTB", 0.90, 0.95),
        ],
        AnalysisSpec::new("GeneXpert", "Culture"),
        vec![BiasKind::ReferenceStandardError],
        vec![Correction::KnownReference],
        Some(KnownReference { se: 0.80, sp: 0.98 }),
    )
}

/// Marginal Se/Sp equal the imperfect-reference design, but both tests miss
/// low-load disease together. With `q = P(BacterialLoad = 1) = 0.8`:
/// Culture Se 0.95625 / 0.175 and GeneXpert Se 0.98 / 0.58 (high / low load)
/// average to 0.80 and 0.90, and `P(both + | PTB) = 0.77 = 0.80 * 0.90 + 0.05`.
fn ptb_bacterial_load() -> Scenario {
    build(
        "ptb-bacterial-load",
        "Conditional dependence through bacterial load. Culture and GeneXpert both tend to miss \
         tuberculosis when the (latent) bacterial load is low, so they err together among the diseased. \
         Marginal Se/Sp match the imperfect-reference design (0.80/0.98 and 0.90/0.95) while \
         P(both positive | PTB) exceeds the independence product by 0.05.",
        "dag {
            PTB [role=target, latent]
            BacterialLoad [role=covariate, latent]
            Culture [role=reference]
            GeneXpert [role=index]
            PTB -> Culture
            PTB -> GeneXpert
            BacterialLoad -> Culture
            BacterialLoad -> GeneXpert
        }",
        vec![
            Cpt::root("PTB", 0.10),
            Cpt::root("BacterialLoad", 0.80),
            Cpt::new("Culture", &["PTB", "BacterialLoad"], &[0.02, 0.02, 0.175, 0.95625]),
            Cpt::new("GeneXpert", &["PTB", "BacterialLoad"], &[0.05, 0.05, 0.58, 0.98]),
        ],
        AnalysisSpec::new("GeneXpert", "Culture"),
        vec![BiasKind::ReferenceStandardError, BiasKind::ConditionalDependence],
        Vec::new(),
        Some(KnownReference { se: 0.80, sp: 0.98 }),
    )
}

fn chlamydia_spectrum() -> Scenario {
    build(
        "chlamydia-spectrum",
        "Spectrum effect by age. The EIA for Chlamydia trachomatis is more accurate in women aged 24 \
         or younger (Age = 1: Se 0.85, Sp 0.97) than in older women (Age = 0: Se 0.70, Sp 0.95); \
         prevalence 0.08, half the cohort young. Clinic type (family planning vs. STD clinic) is a \
         comparable stratifier not modelled here.",
        "dag {
            CT [role=target]
            Age [role=covariate]
            EIA [role=index]
            CT -> EIA
            Age -> EIA
        }",
        vec![
            Cpt::root("CT", 0.08),
            Cpt::root("Age", 0.50),
            Cpt::new("EIA", &["CT", "Age"], &[0.05, 0.03, 0.70, 0.85]),
        ],
        AnalysisSpec::new("EIA", "CT").stratified_by("Age"),
        vec![BiasKind::SpectrumEffect],
        vec![Correction::Stratification],
        None,
    )
}

fn tb_hiv_confounding() -> Scenario {
    build(
        "tb-hiv-confounding",
        "Confounding by HIV status. HIV raises the risk of tuberculosis (0.30 vs. 0.10) and lowers the \
         sensitivity of the tuberculin skin test (0.50 vs. 0.80; Sp 0.85 in both groups); 20% of the \
         cohort is HIV positive. The crude analysis leaves PTB <- HIV -> TST open.",
        "dag {
            HIV [role=covariate]
            PTB [role=target]
            TST [role=index]
            HIV -> PTB
            HIV -> TST
            PTB -> TST
        }",
        vec![
            Cpt::root("HIV", 0.20),
            Cpt::new("PTB", &["HIV"], &[0.10, 0.30]),
            Cpt::new("TST", &["PTB", "HIV"], &[0.15, 0.15, 0.80, 0.50]),
        ],
        AnalysisSpec::new("TST", "PTB"),
        vec![BiasKind::Confounding],
        vec![Correction::Stratification],
        None,
    )
}

fn hpv_partial_verification() -> Scenario {
    build(
        "hpv-partial-verification",
        "Partial verification. Every PCR-positive woman and a random 10% of PCR-negative women \
         receive colposcopy, treated as a perfect reference for HPV; PCR Se 0.90, Sp 0.95, \
         prevalence 0.10. Analysing verified women only selects on the index result.",
        "dag {
            HPV [role=target]
            PCR [role=index]
            V [role=selection]
            HPV -> PCR
            PCR -> V
        }",
        vec![
            Cpt::root("HPV", 0.10),
            Cpt::test("PCR", "HPV", 0.90, 0.95),
            Cpt::new("V", &["PCR"], &[0.10, 1.0]),
        ],
        AnalysisSpec::new("PCR", "HPV").conditioned_on("V", 1),
        vec![BiasKind::PartialVerification],
        vec![Correction::BeggGreenes],
        None,
    )
}

/// The five canonical designs, in a fixed order.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        ptb_imperfect_reference(),
        ptb_bacterial_load(),
        chlamydia_spectrum(),
        tb_hiv_confounding(),
        hpv_partial_verification(),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{accuracy_vs, conditional_covariance};

    #[test]
    fn five_named_scenarios() {
        let names: Vec<String> = builtin_scenarios().into_iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            [
                "ptb-imperfect-reference",
                "ptb-bacterial-load",
                "chlamydia-spectrum",
                "tb-hiv-confounding",
                "hpv-partial-verification"
            ]
        );
    }

    #[test]
    fn detector_matches_expectations() {
        for s in builtin_scenarios() {
            s.validate().unwrap();
            assert_eq!(s.detected_kinds().unwrap(), s.expected_findings, "{}", s.name);
        }
    }

    #[test]
    fn bacterial_load_preserves_marginals() {
        let s = builtin_scenario("ptb-bacterial-load").unwrap();
        let j = s.net.exact_joint().unwrap();
        let culture = accuracy_vs(&j, "Culture", "PTB").unwrap();
        let xpert = accuracy_vs(&j, "GeneXpert", "PTB").unwrap();
        assert!((culture.se.unwrap() - 0.80).abs() < 1e-12);
        assert!((culture.sp.unwrap() - 0.98).abs() < 1e-12);
        assert!((xpert.se.unwrap() - 0.90).abs() < 1e-12);
        assert!((xpert.sp.unwrap() - 0.95).abs() < 1e-12);
        let both = j
            .query_prob(&[("Culture", 1), ("GeneXpert", 1)], &[("PTB", 1)])
            .unwrap();
        assert!((both - 0.77).abs() < 1e-12);
        let cov = conditional_covariance(&j, "Culture", "GeneXpert", "PTB").unwrap();
        assert!((cov.given_present - 0.05).abs() < 1e-12);
        assert!(cov.given_absent.abs() < 1e-12);
        let naive = accuracy_vs(&j, "GeneXpert", "Culture").unwrap();
        assert!((naive.se.unwrap() - 0.794898).abs() < 1e-6);
    }

    #[test]
    fn verification_fraction_readback() {
        let s = builtin_scenario("hpv-partial-verification").unwrap();
        let j = s.net.exact_joint().unwrap();
        assert!((j.query_prob(&[("V", 1)], &[("PCR", 0)]).unwrap() - 0.10).abs() < 1e-15);
    }
}
