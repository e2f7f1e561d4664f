//! Scenario JSON documents.
//!
//! ```json
//! {
//!   "name": "ptb-imperfect-reference",
//!   "description": "...",
//!   "dag": "dag { PTB [role=target, latent] ... }",
//!   "cpts": { "Culture": { "parents": ["PTB"], "p1": [0.02, 0.8] }, ... },
//!   "spec": { "index": "GeneXpert", "truth_proxy": "Culture", "conditioned": {}, "strata": [] },
//!   "expected_findings": ["reference_standard_error"],
//!   "corrections": ["known-reference"],
//!   "known_reference": { "se": 0.8, "sp": 0.98 }
//! }
//! ```
//!
//! `p1[i]` is `P(node = 1 | parents = i)` where `i` reads the parent values
//! as a binary number, first-listed parent most significant. Only `dag` and
//! `cpts` are needed to simulate; `spec` is needed to audit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use dtadag_core::bias::BiasKind;
use dtadag_core::estimate::Correction;
use dtadag_core::prob::ProbError;
use dtadag_core::scenario::{KnownReference, Scenario, ScenarioError};
use dtadag_core::{AnalysisSpec, BayesNet, Cpt, Dag, GraphError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CptEntry {
    #[serde(default)]
    pub parents: Vec<String>,
    pub p1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub dag: String,
    pub cpts: BTreeMap<String, CptEntry>,
    pub spec: AnalysisSpec,
    #[serde(default)]
    pub expected_findings: Vec<BiasKind>,
    #[serde(default)]
    pub corrections: Vec<String>,
    #[serde(default)]
    pub known_reference: Option<KnownReference>,
}

/// A network-only document: `{ "dag": ..., "cpts": ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub dag: String,
    pub cpts: BTreeMap<String, CptEntry>,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid DAG: {0}")]
    Graph(#[from] GraphError),
    #[error("invalid CPTs: {0}")]
    Prob(#[from] ProbError),
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("unknown correction `{0}` (expected begg-greenes, known-reference, lca or stratification)")]
    UnknownCorrection(String),
}

fn build_net(dag: &str, cpts: &BTreeMap<String, CptEntry>) -> Result<BayesNet, LoadError> {
    let dag = Dag::parse(dag)?;
    let cpts = cpts
        .iter()
        .map(|(node, e)| {
            let parents: Vec<&str> = e.parents.iter().map(String::as_str).collect();
            Cpt::new(node.as_str(), &parents, &e.p1)
        })
        .collect();
    Ok(BayesNet::new(dag, cpts)?)
}

fn cpt_entries(net: &BayesNet) -> BTreeMap<String, CptEntry> {
    net.cpts()
        .iter()
        .map(|c| {
            (
                c.node.clone(),
                CptEntry {
                    parents: c.parents.clone(),
                    p1: c.p1.clone(),
                },
            )
        })
        .collect()
}

impl ScenarioFile {
    /// Builds and validates the scenario. The returned warnings list any
    /// difference between declared and detected findings.
    pub fn into_scenario(self) -> Result<(Scenario, Vec<String>), LoadError> {
        let net = build_net(&self.dag, &self.cpts)?;
        let corrections = self
            .corrections
            .iter()
            .map(|c| Correction::from_id(c).ok_or_else(|| LoadError::UnknownCorrection(c.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let scenario = Scenario {
            name: self.name,
            description: self.description,
            net,
            spec: self.spec,
            expected_findings: self.expected_findings,
            corrections,
            known_reference: self.known_reference,
        };
        scenario.validate()?;
        let detected = scenario.detected_kinds()?;
        let mut warnings = Vec::new();
        if detected != scenario.expected_findings {
            let show = |k: &[BiasKind]| k.iter().map(|k| k.id()).collect::<Vec<_>>().join(", ");
            warnings.push(format!(
                "scenario `{}`: expected findings [{}] but detected [{}]",
                scenario.name,
                show(&scenario.expected_findings),
                show(&detected)
            ));
        }
        Ok((scenario, warnings))
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        ScenarioFile {
            name: s.name.clone(),
            description: s.description.clone(),
            dag: s.net.dag().to_syntax(),
            cpts: cpt_entries(&s.net),
            spec: s.spec.clone(),
            expected_findings: s.expected_findings.clone(),
            corrections: s.corrections.iter().map(|c| c.id().to_string()).collect(),
            known_reference: s.known_reference,
        }
    }
}

impl NetworkFile {
    pub fn into_net(self) -> Result<BayesNet, LoadError> {
        build_net(&self.dag, &self.cpts)
    }

    pub fn from_net(net: &BayesNet) -> Self {
        NetworkFile {
            dag: net.dag().to_syntax(),
            cpts: cpt_entries(net),
        }
    }
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_scenario(text: &str) -> Result<(Scenario, Vec<String>), LoadError> {
    serde_json::from_str::<ScenarioFile>(text)?.into_scenario()
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<(Scenario, Vec<String>), LoadError> {
    parse_scenario(&read(path)?)
}

/// Reads a network from either a scenario file or a network-only file.
pub fn load_network(path: &Path) -> Result<BayesNet, LoadError> {
    let text = read(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("spec").is_some() {
        Ok(parse_scenario(&text)?.0.net)
    } else {
        serde_json::from_value::<NetworkFile>(value)?.into_net()
    }
}

/// Canonical JSON for a scenario (sorted keys, two-space indent, final LF).
pub fn scenario_to_json(s: &Scenario) -> String {
    crate::render::canonical_json(&ScenarioFile::from_scenario(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use dtadag_core::scenario::builtin_scenarios;

    #[test]
    fn builtins_round_trip() {
        for s in builtin_scenarios() {
            let text = scenario_to_json(&s);
            let (back, warnings) = parse_scenario(&text).unwrap();
            assert!(warnings.is_empty());
            assert_eq!(back, s);
        }
    }

    #[test]
    fn missing_cpt_names_the_node() {
        let s = &builtin_scenarios()[0];
        let mut file = ScenarioFile::from_scenario(s);
        file.cpts.remove("Culture");
        let err = file.into_scenario().unwrap_err();
        assert!(err.to_string().contains("Culture"), "{err}");
    }

    #[test]
    fn mismatched_expectation_is_a_warning() {
        let s = &builtin_scenarios()[0];
        let mut file = ScenarioFile::from_scenario(s);
        file.expected_findings.clear();
        let (_, warnings) = file.into_scenario().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("reference_standard_error"));
    }

    #[test]
    fn unknown_fields_rejected() {
        let s = &builtin_scenarios()[0];
        let mut v = serde_json::to_value(ScenarioFile::from_scenario(s)).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(parse_scenario(&v.to_string()), Err(LoadError::Json(_))));
    }
}
