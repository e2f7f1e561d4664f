//! Structural detection of the five canonical DTA bias patterns.
//!
//! With `D` the target node, `T2` the index test, `P` the truth proxy the
//! naive analysis scores against and `C` the conditioned nodes, the rules
//! are, in report order:
//!
//! 1. reference standard error: `D` is latent, `P != D` and `P` descends
//!    from `D`; witnessed by paths `P <- ... D -> ... T2`;
//! 2. conditional dependence: `P` and `T2` are not d-separated by `D`;
//!    witnessed by the open paths between them given `D`;
//! 3. spectrum effect: an observed `R` outside `{D, P}` with `R -> T2` and
//!    `R` marginally d-separated from `D`;
//! 4. confounding: an open backdoor path from `D` to `T2` given the strata;
//! 5. partial verification: some conditioned `V` has `T2`, `D`, or a node
//!    d-connected to `D` among its ancestors.
//!
//! Each rule fires at most once and lists all of its witnesses.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::graph::{AdjustmentSets, Dag, GraphError, NodeRole, Path, Step};

/// The naive analysis a study design performs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    pub index: String,
    /// The node treated as the target condition.
    pub truth_proxy: String,
    /// Restriction to rows where each node takes its value, e.g. `V = 1`.
    #[serde(default)]
    pub conditioned: BTreeMap<String, u8>,
    #[serde(default)]
    pub strata: BTreeSet<String>,
}

impl AnalysisSpec {
    pub fn new(index: impl Into<String>, truth_proxy: impl Into<String>) -> Self {
        AnalysisSpec {
            index: index.into(),
            truth_proxy: truth_proxy.into(),
            conditioned: BTreeMap::new(),
            strata: BTreeSet::new(),
        }
    }

    pub fn conditioned_on(mut self, node: impl Into<String>, value: u8) -> Self {
        self.conditioned.insert(node.into(), value);
        self
    }

    pub fn stratified_by(mut self, node: impl Into<String>) -> Self {
        self.strata.insert(node.into());
        self
    }

    /// Checks names, values and observability against `dag`.
    pub fn validate(&self, dag: &Dag) -> Result<(), BiasError> {
        let exists = |n: &str| {
            if dag.contains(n) {
                Ok(())
            } else {
                Err(BiasError::Spec(format!("unknown node `{n}`")))
            }
        };
        exists(&self.index)?;
        exists(&self.truth_proxy)?;
        if self.index == self.truth_proxy {
            return Err(BiasError::Spec("index and truth_proxy must differ".into()));
        }
        if dag.node(&self.index)?.role != NodeRole::IndexTest {
            return Err(BiasError::Spec(format!("`{}` does not have role index", self.index)));
        }
        for (name, &value) in &self.conditioned {
            exists(name)?;
            if value > 1 {
                return Err(BiasError::Spec(format!(
                    "conditioned value for `{name}` must be 0 or 1"
                )));
            }
            if !dag.node(name)?.observed {
                return Err(BiasError::Spec(format!("cannot condition on latent node `{name}`")));
            }
        }
        for name in &self.strata {
            exists(name)?;
            if !dag.node(name)?.observed {
                return Err(BiasError::Spec(format!("cannot stratify on latent node `{name}`")));
            }
            if name == &self.index || self.conditioned.contains_key(name) {
                return Err(BiasError::Spec(format!(
                    "stratum `{name}` is also the index or a conditioned node"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    ReferenceStandardError,
    ConditionalDependence,
    SpectrumEffect,
    Confounding,
    PartialVerification,
}

impl BiasKind {
    pub const ALL: [BiasKind; 5] = [
        BiasKind::ReferenceStandardError,
        BiasKind::ConditionalDependence,
        BiasKind::SpectrumEffect,
        BiasKind::Confounding,
        BiasKind::PartialVerification,
    ];

    pub fn id(self) -> &'static str {
        match self {
            BiasKind::ReferenceStandardError => "reference_standard_error",
            BiasKind::ConditionalDependence => "conditional_dependence",
            BiasKind::SpectrumEffect => "spectrum_effect",
            BiasKind::Confounding => "confounding",
            BiasKind::PartialVerification => "partial_verification",
        }
    }

    /// The corresponding structure in etiological (exposure-outcome) studies.
    pub fn etiological_analog(self) -> &'static str {
        match self {
            BiasKind::ReferenceStandardError => "exposure misclassification",
            BiasKind::ConditionalDependence => "misclassification plus confounding",
            BiasKind::SpectrumEffect => "effect modification",
            BiasKind::Confounding => "confounding",
            BiasKind::PartialVerification => "selection bias",
        }
    }

    /// Short name of the canonical structure.
    pub fn anchor(self) -> &'static str {
        match self {
            BiasKind::ReferenceStandardError => "imperfect reference standard: backdoor path through the target",
            BiasKind::ConditionalDependence => "index and reference tests share a cause beyond the target",
            BiasKind::SpectrumEffect => "index test accuracy varies with a covariate",
            BiasKind::Confounding => "common cause of target condition and index test",
            BiasKind::PartialVerification => "verification depends on the index test or a related covariate",
        }
    }

    pub fn severity(self) -> &'static str {
        match self {
            BiasKind::SpectrumEffect => "heterogeneity, not a bias",
            _ => "bias",
        }
    }

    pub fn is_path_based(self) -> bool {
        matches!(
            self,
            BiasKind::ReferenceStandardError | BiasKind::ConditionalDependence | BiasKind::Confounding
        )
    }
}

impl fmt::Display for BiasKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiasFinding {
    pub kind: BiasKind,
    /// Implicated nodes, sorted.
    pub nodes: Vec<String>,
    pub paths: Vec<Path>,
    pub explanation: String,
    /// Only for confounding.
    pub adjustment: Option<AdjustmentSets>,
}

impl BiasFinding {
    pub fn severity(&self) -> String {
        match &self.adjustment {
            Some(AdjustmentSets::NoObservedSet) => {
                format!("{}, unadjustable with observed nodes", self.kind.severity())
            }
            _ => self.kind.severity().to_string(),
        }
    }

    pub fn path_strings(&self) -> Vec<String> {
        self.paths.iter().map(Path::arrow_string).collect()
    }
}

impl Serialize for BiasFinding {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BiasFinding", 8)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("nodes", &self.nodes)?;
        st.serialize_field("paths", &self.path_strings())?;
        st.serialize_field("explanation", &self.explanation)?;
        st.serialize_field("etiological_analog", self.kind.etiological_analog())?;
        st.serialize_field("paper_anchor", self.kind.anchor())?;
        st.serialize_field("severity", &self.severity())?;
        match &self.adjustment {
            Some(a) => st.serialize_field("adjustment_sets", a)?,
            None => st.skip_field("adjustment_sets")?,
        }
        st.end()
    }
}

/// A violation of the role conventions a design graph must follow.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoleError {
    #[error("no target node")]
    NoTarget,
    #[error("multiple target nodes: {}", .0.join(", "))]
    MultipleTargets(Vec<String>),
    #[error("no index test node")]
    NoIndexTest,
    #[error("multiple index test nodes: {}", .0.join(", "))]
    MultipleIndexTests(Vec<String>),
    #[error("selection node has no cause: {0}")]
    SelectionWithoutCause(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BiasError {
    #[error("invalid roles: {}", join_roles(.0))]
    Roles(Vec<RoleError>),
    #[error("invalid analysis: {0}")]
    Spec(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

fn join_roles(errors: &[RoleError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Checks for exactly one target, exactly one index test, and a cause for
/// every selection node. Returns every violation found.
pub fn validate_roles(dag: &Dag) -> Result<(), Vec<RoleError>> {
    let with_role = |role| -> Vec<String> {
        dag.nodes()
            .iter()
            .filter(|n| n.role == role)
            .map(|n| n.name.clone())
            .collect()
    };
    let mut errors = Vec::new();
    let targets = with_role(NodeRole::Target);
    match targets.len() {
        0 => errors.push(RoleError::NoTarget),
        1 => {}
        _ => errors.push(RoleError::MultipleTargets(targets)),
    }
    let index = with_role(NodeRole::IndexTest);
    match index.len() {
        0 => errors.push(RoleError::NoIndexTest),
        1 => {}
        _ => errors.push(RoleError::MultipleIndexTests(index)),
    }
    for v in with_role(NodeRole::Selection) {
        if dag.parents(&v).map(|p| p.is_empty()).unwrap_or(true) {
            errors.push(RoleError::SelectionWithoutCause(v));
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// The single target node of a role-valid graph.
pub fn target_of(dag: &Dag) -> Option<&str> {
    let mut it = dag.nodes().iter().filter(|n| n.role == NodeRole::Target);
    match (it.next(), it.next()) {
        (Some(t), None) => Some(&t.name),
        _ => None,
    }
}

/// Runs the five detection rules in order.
pub fn detect_biases(dag: &Dag, spec: &AnalysisSpec) -> Result<Vec<BiasFinding>, BiasError> {
    validate_roles(dag).map_err(BiasError::Roles)?;
    spec.validate(dag)?;
    let d = target_of(dag).expect("roles validated");
    let t2 = spec.index.as_str();
    let p = spec.truth_proxy.as_str();

    let mut findings = Vec::new();
    findings.extend(reference_standard_error(dag, d, p, t2)?);
    findings.extend(conditional_dependence(dag, d, p, t2)?);
    findings.extend(spectrum_effect(dag, d, p, t2)?);
    findings.extend(confounding(dag, d, t2, spec)?);
    findings.extend(partial_verification(dag, d, t2, spec)?);
    Ok(findings)
}

fn sorted_nodes<'a>(fixed: &[&str], paths: impl IntoIterator<Item = &'a Path>) -> Vec<String> {
    let mut set: BTreeSet<String> = fixed.iter().map(|s| s.to_string()).collect();
    for path in paths {
        set.extend(path.nodes.iter().cloned());
    }
    set.into_iter().collect()
}

fn list(paths: &[Path]) -> String {
    paths.iter().map(Path::arrow_string).collect::<Vec<_>>().join("; ")
}

fn analog_line(kind: BiasKind) -> String {
    format!("Etiological analog: {}.", kind.etiological_analog())
}

fn reference_standard_error(dag: &Dag, d: &str, p: &str, t2: &str) -> Result<Option<BiasFinding>, BiasError> {
    if dag.node(d)?.observed || p == d || !dag.descendants(d)?.contains(p) {
        return Ok(None);
    }
    let paths: Vec<Path> = dag
        .all_paths(p, t2)?
        .into_iter()
        .filter(|path| match path.nodes.iter().position(|n| n == d) {
            Some(i) => {
                path.steps[..i].iter().all(|&s| s == Step::Backward)
                    && path.steps[i..].iter().all(|&s| s == Step::Forward)
            }
            None => false,
        })
        .collect();
    if paths.is_empty() {
        return Ok(None);
    }
    let explanation = format!(
        "`{p}` is scored as if it were `{d}`, but `{d}` is latent and `{p}` is only an imperfect measurement of it. \
         `{t2}` is compared with `{p}` through {}, so errors in `{p}` are charged to `{t2}`. {}",
        list(&paths),
        analog_line(BiasKind::ReferenceStandardError)
    );
    Ok(Some(BiasFinding {
        kind: BiasKind::ReferenceStandardError,
        nodes: sorted_nodes(&[d, p, t2], &paths),
        paths,
        explanation,
        adjustment: None,
    }))
}

fn conditional_dependence(dag: &Dag, d: &str, p: &str, t2: &str) -> Result<Option<BiasFinding>, BiasError> {
    if p == d || dag.d_separated(&[p], &[t2], &[d])? {
        return Ok(None);
    }
    let paths = dag.open_paths(p, t2, &[d])?;
    let explanation = format!(
        "`{p}` and `{t2}` stay dependent within levels of `{d}` through {}, \
         so they tend to err together and agreement between them overstates accuracy. {}",
        list(&paths),
        analog_line(BiasKind::ConditionalDependence)
    );
    Ok(Some(BiasFinding {
        kind: BiasKind::ConditionalDependence,
        nodes: sorted_nodes(&[p, t2], &paths),
        paths,
        explanation,
        adjustment: None,
    }))
}

fn spectrum_effect(dag: &Dag, d: &str, p: &str, t2: &str) -> Result<Option<BiasFinding>, BiasError> {
    let mut witnesses = Vec::new();
    for r in dag.parents(t2)? {
        if r == d || r == p || !dag.node(r)?.observed {
            continue;
        }
        if dag.d_separated(&[r], &[d], &[])? {
            witnesses.push(r);
        }
    }
    if witnesses.is_empty() {
        return Ok(None);
    }
    let mut paths = Vec::new();
    for &r in &witnesses {
        paths.extend(dag.all_paths(r, t2)?.into_iter().filter(|path| path.nodes.len() == 2));
    }
    let explanation = format!(
        "The accuracy of `{t2}` varies across levels of {}, which {} independent of `{d}`. \
         A pooled estimate averages over that mix; report results by subgroup. {}",
        witnesses
            .iter()
            .map(|w| format!("`{w}`"))
            .collect::<Vec<_>>()
            .join(", "),
        if witnesses.len() == 1 { "is" } else { "are" },
        analog_line(BiasKind::SpectrumEffect)
    );
    let mut fixed = witnesses.clone();
    fixed.push(t2);
    Ok(Some(BiasFinding {
        kind: BiasKind::SpectrumEffect,
        nodes: sorted_nodes(&fixed, &paths),
        paths,
        explanation,
        adjustment: None,
    }))
}

fn confounding(dag: &Dag, d: &str, t2: &str, spec: &AnalysisSpec) -> Result<Option<BiasFinding>, BiasError> {
    let strata: Vec<&str> = spec.strata.iter().map(String::as_str).filter(|&s| s != d).collect();
    let paths = dag.backdoor_paths(d, t2, &strata)?;
    if paths.is_empty() {
        return Ok(None);
    }
    let adjustment = dag.minimal_adjustment_sets(d, t2)?;
    let remedy = match &adjustment {
        AdjustmentSets::NoObservedSet => {
            "No set of observed nodes blocks it: unadjustable with observed nodes.".to_string()
        }
        AdjustmentSets::Sets(sets) => format!(
            "Stratify on {}.",
            sets.iter()
                .map(|s| format!("{{{}}}", s.iter().cloned().collect::<Vec<_>>().join(", ")))
                .collect::<Vec<_>>()
                .join(" or ")
        ),
    };
    let explanation = format!(
        "`{d}` and `{t2}` share a common cause: {} is an open backdoor path. {remedy} {}",
        list(&paths),
        analog_line(BiasKind::Confounding)
    );
    Ok(Some(BiasFinding {
        kind: BiasKind::Confounding,
        nodes: sorted_nodes(&[d, t2], &paths),
        paths,
        explanation,
        adjustment: Some(adjustment),
    }))
}

fn partial_verification(dag: &Dag, d: &str, t2: &str, spec: &AnalysisSpec) -> Result<Option<BiasFinding>, BiasError> {
    let mut paths = Vec::new();
    let mut fixed: Vec<&str> = Vec::new();
    for v in spec.conditioned.keys() {
        let v = v.as_str();
        let mut witnesses = Vec::new();
        for a in dag.ancestors(v)? {
            let hit = a == t2 || a == d || !dag.d_separated(&[&a], &[d], &[])?;
            if hit {
                witnesses.push(a);
            }
        }
        if witnesses.is_empty() {
            continue;
        }
        fixed.push(v);
        for a in &witnesses {
            paths.extend(dag.all_paths(a, v)?.into_iter().filter(Path::is_directed));
        }
    }
    if fixed.is_empty() {
        return Ok(None);
    }
    paths.sort_by(|a, b| a.nodes.cmp(&b.nodes));
    paths.dedup();
    let explanation = format!(
        "The analysis keeps only rows with {}, and who is kept depends on {}. \
         Accuracy among the kept rows does not carry over to the full cohort. {}",
        fixed
            .iter()
            .map(|v| format!("`{v}={}`", spec.conditioned[*v]))
            .collect::<Vec<_>>()
            .join(", "),
        list(&paths),
        analog_line(BiasKind::PartialVerification)
    );
    Ok(Some(BiasFinding {
        kind: BiasKind::PartialVerification,
        nodes: sorted_nodes(&fixed, &paths),
        paths,
        explanation,
        adjustment: None,
    }))
}
