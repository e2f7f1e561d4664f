//! Binary Bayes nets: conditional probability tables, exact joints by full
//! enumeration, conditioning, and seeded ancestral sampling.
//!
//! Every variable is binary. Configuration indices are binary numbers with
//! the first-listed variable as the most significant bit, both for CPT
//! parent configurations and for [`JointTable`] cells.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Dag, GraphError};
use crate::rng::Stream;

/// Largest network [`BayesNet::exact_joint`] will enumerate.
pub const MAX_JOINT_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no CPT for node `{0}`")]
    MissingCpt(String),
    #[error("CPT for `{0}` does not match any node")]
    ExtraCpt(String),
    #[error("more than one CPT for node `{0}`")]
    DuplicateCpt(String),
    #[error("CPT parents for `{node}` are [{}] but the graph has [{}]", .found.join(", "), .expected.join(", "))]
    ParentMismatch {
        node: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("CPT for `{node}` has {found} entries, expected {expected}")]
    TableLength {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("probability {value} for `{node}` is outside [0, 1]")]
    OutOfRange { node: String, value: f64 },
    #[error("{nodes} variables exceed the enumeration limit of {limit}")]
    TooManyNodes { nodes: usize, limit: usize },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("value {value} for `{variable}` is not binary")]
    NotBinary { variable: String, value: u8 },
    #[error("variable `{0}` appears more than once")]
    RepeatedVariable(String),
    #[error("variable selection must not be empty")]
    EmptySelection,
    #[error("conditioning event has zero probability")]
    ZeroProbability,
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("row {row} has {found} values, expected {expected}")]
    RowArity { row: usize, expected: usize, found: usize },
    #[error("joint table is not a distribution: {0}")]
    NotNormalized(String),
    #[error("sample size must be at least 1")]
    NoRows,
}

/// `P(node = 1 | parents)` for each parent configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub node: String,
    pub parents: Vec<String>,
    pub p1: Vec<f64>,
}

impl Cpt {
    pub fn new(node: impl Into<String>, parents: &[&str], p1: &[f64]) -> Self {
        Cpt {
            node: node.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            p1: p1.to_vec(),
        }
    }

    /// A root node with `P(node = 1) = p`.
    pub fn root(node: impl Into<String>, p: f64) -> Self {
        Cpt::new(node, &[], &[p])
    }

    /// A test result depending only on `truth`: `P(T=1|truth=1) = se`,
    /// `P(T=1|truth=0) = 1 - sp`.
    pub fn test(node: impl Into<String>, truth: &str, se: f64, sp: f64) -> Self {
        Cpt::new(node, &[truth], &[1.0 - sp, se])
    }
}

/// A DAG with one validated CPT per node.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    dag: Dag,
    /// In graph declaration order.
    cpts: Vec<Cpt>,
    /// Graph node ids of each CPT's parents, in CPT order.
    parent_ids: Vec<Vec<usize>>,
}

impl BayesNet {
    /// Attaches CPTs to a graph. Each CPT's parent list must be a permutation
    /// of the node's graph parents; its order fixes the table layout.
    pub fn new(dag: Dag, cpts: Vec<Cpt>) -> Result<Self, ProbError> {
        let n = dag.len();
        let mut slots: Vec<Option<Cpt>> = vec![None; n];
        for cpt in cpts {
            let id = match dag.id(&cpt.node) {
                Ok(id) => id,
                Err(_) => return Err(ProbError::ExtraCpt(cpt.node)),
            };
            if slots[id].is_some() {
                return Err(ProbError::DuplicateCpt(cpt.node));
            }
            slots[id] = Some(cpt);
        }
        let mut ordered = Vec::with_capacity(n);
        let mut parent_ids = Vec::with_capacity(n);
        for (id, slot) in slots.into_iter().enumerate() {
            let name = dag.name(id).to_string();
            let cpt = slot.ok_or_else(|| ProbError::MissingCpt(name.clone()))?;
            let expected: BTreeSet<&str> = dag.parent_ids(id).iter().map(|&p| dag.name(p)).collect();
            let found: BTreeSet<&str> = cpt.parents.iter().map(String::as_str).collect();
            if expected != found || found.len() != cpt.parents.len() {
                return Err(ProbError::ParentMismatch {
                    node: name,
                    expected: expected.into_iter().map(String::from).collect(),
                    found: cpt.parents.clone(),
                });
            }
            let want = 1usize << cpt.parents.len();
            if cpt.p1.len() != want {
                return Err(ProbError::TableLength {
                    node: name,
                    expected: want,
                    found: cpt.p1.len(),
                });
            }
            if let Some(&bad) = cpt.p1.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(ProbError::OutOfRange { node: name, value: bad });
            }
            parent_ids.push(cpt.parents.iter().map(|p| dag.id(p)).collect::<Result<Vec<_>, _>>()?);
            ordered.push(cpt);
        }
        Ok(BayesNet {
            dag,
            cpts: ordered,
            parent_ids,
        })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    /// CPTs in graph declaration order.
    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, node: &str) -> Result<&Cpt, ProbError> {
        Ok(&self.cpts[self.dag.id(node)?])
    }

    /// `P(node = 1)` given the values of all nodes, indexed by graph id.
    fn p1(&self, id: usize, values: &[u8]) -> f64 {
        let config = self.parent_ids[id]
            .iter()
            .fold(0usize, |acc, &p| (acc << 1) | values[p] as usize);
        self.cpts[id].p1[config]
    }

    /// Full joint by the chain rule over all `2^n` configurations.
    /// Variables are in topological order, ties broken by declaration order.
    pub fn exact_joint(&self) -> Result<JointTable, ProbError> {
        let n = self.dag.len();
        if n > MAX_JOINT_NODES {
            return Err(ProbError::TooManyNodes {
                nodes: n,
                limit: MAX_JOINT_NODES,
            });
        }
        let order = self.dag.topo_ids();
        let mut values = vec![0u8; n];
        let mut mass = Vec::with_capacity(1 << n);
        for config in 0..(1usize << n) {
            let mut m = 1.0;
            for (pos, &id) in order.iter().enumerate() {
                let v = (config >> (n - 1 - pos)) & 1;
                values[id] = v as u8;
                let p = self.p1(id, &values);
                m *= if v == 1 { p } else { 1.0 - p };
            }
            mass.push(m);
        }
        Ok(JointTable {
            variables: order.iter().map(|&i| self.dag.name(i).to_string()).collect(),
            mass,
        })
    }

    /// Draws `n` rows by ancestral sampling.
    ///
    /// Node `i` (graph declaration index) consumes substream `i` of the
    /// seeded generator, one uniform per row, so the result depends only on
    /// `(net, n, seed)`. Columns follow the same order as
    /// [`BayesNet::exact_joint`].
    #[allow(clippy::needless_range_loop)]
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset, ProbError> {
        if n == 0 {
            return Err(ProbError::NoRows);
        }
        let nodes = self.dag.len();
        let order = self.dag.topo_ids();
        let mut by_id: Vec<Vec<u8>> = vec![Vec::new(); nodes];
        for &id in &order {
            let mut stream = Stream::new(seed, id as u64);
            let mut column = Vec::with_capacity(n);
            let parents = &self.parent_ids[id];
            for row in 0..n {
                let config = parents
                    .iter()
                    .fold(0usize, |acc, &p| (acc << 1) | by_id[p][row] as usize);
                column.push(stream.bernoulli(self.cpts[id].p1[config]) as u8);
            }
            by_id[id] = column;
        }
        let variables = order.iter().map(|&i| self.dag.name(i).to_string()).collect();
        let columns = order.iter().map(|&i| core::mem::take(&mut by_id[i])).collect();
        Ok(Dataset {
            variables,
            columns,
            seed,
        })
    }
}

/// Probability mass over every configuration of a list of binary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    variables: Vec<String>,
    mass: Vec<f64>,
}

fn check_assignment(vars: &[String], pairs: &[(&str, u8)]) -> Result<Vec<(usize, u8)>, ProbError> {
    let mut out: Vec<(usize, u8)> = Vec::with_capacity(pairs.len());
    for &(name, value) in pairs {
        let pos = vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))?;
        if value > 1 {
            return Err(ProbError::NotBinary {
                variable: name.to_string(),
                value,
            });
        }
        if out.iter().any(|&(p, _)| p == pos) {
            return Err(ProbError::RepeatedVariable(name.to_string()));
        }
        out.push((pos, value));
    }
    Ok(out)
}

impl JointTable {
    /// Validates entries are non-negative and sum to one within `1e-9`.
    pub fn new(variables: Vec<String>, mass: Vec<f64>) -> Result<Self, ProbError> {
        if variables.len() > MAX_JOINT_NODES {
            return Err(ProbError::TooManyNodes {
                nodes: variables.len(),
                limit: MAX_JOINT_NODES,
            });
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].contains(v) {
                return Err(ProbError::RepeatedVariable(v.clone()));
            }
        }
        if mass.len() != 1 << variables.len() {
            return Err(ProbError::NotNormalized("wrong number of cells".into()));
        }
        if mass.iter().any(|m| m.is_nan() || *m < 0.0) {
            return Err(ProbError::NotNormalized("negative or NaN cell".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ProbError::NotNormalized(alloc::format!("cells sum to {total}")));
        }
        Ok(JointTable { variables, mass })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn bit(&self, config: usize, pos: usize) -> u8 {
        ((config >> (self.variables.len() - 1 - pos)) & 1) as u8
    }

    fn matches(&self, config: usize, assignment: &[(usize, u8)]) -> bool {
        assignment.iter().all(|&(pos, v)| self.bit(config, pos) == v)
    }

    /// Probability that every listed variable takes its value.
    pub fn prob(&self, event: &[(&str, u8)]) -> Result<f64, ProbError> {
        let a = check_assignment(&self.variables, event)?;
        Ok(self
            .mass
            .iter()
            .enumerate()
            .filter(|&(c, _)| self.matches(c, &a))
            .map(|(_, m)| m)
            .sum())
    }

    /// Sums out every variable not in `vars`; keeps the table's order.
    pub fn marginal(&self, vars: &[&str]) -> Result<JointTable, ProbError> {
        if vars.is_empty() {
            return Err(ProbError::EmptySelection);
        }
        let keep_pairs: Vec<(&str, u8)> = vars.iter().map(|&v| (v, 0)).collect();
        let mut keep: Vec<usize> = check_assignment(&self.variables, &keep_pairs)?
            .into_iter()
            .map(|(p, _)| p)
            .collect();
        keep.sort_unstable();
        let k = keep.len();
        let mut mass = vec![0.0; 1 << k];
        for (config, m) in self.mass.iter().enumerate() {
            let idx = keep
                .iter()
                .fold(0usize, |acc, &pos| (acc << 1) | self.bit(config, pos) as usize);
            mass[idx] += m;
        }
        Ok(JointTable {
            variables: keep.iter().map(|&p| self.variables[p].clone()).collect(),
            mass,
        })
    }

    /// Restricts to the evidence and renormalizes. Returns the table over the
    /// remaining variables and `P(evidence)`.
    pub fn condition(&self, evidence: &[(&str, u8)]) -> Result<(JointTable, f64), ProbError> {
        let a = check_assignment(&self.variables, evidence)?;
        let rest: Vec<usize> = (0..self.variables.len())
            .filter(|p| !a.iter().any(|&(q, _)| q == *p))
            .collect();
        let mut mass = vec![0.0; 1 << rest.len()];
        let mut total = 0.0;
        for (config, &m) in self.mass.iter().enumerate() {
            if !self.matches(config, &a) {
                continue;
            }
            let idx = rest
                .iter()
                .fold(0usize, |acc, &pos| (acc << 1) | self.bit(config, pos) as usize);
            mass[idx] += m;
            total += m;
        }
        if total <= 0.0 {
            return Err(ProbError::ZeroProbability);
        }
        for m in &mut mass {
            *m /= total;
        }
        Ok((
            JointTable {
                variables: rest.iter().map(|&p| self.variables[p].clone()).collect(),
                mass,
            },
            total,
        ))
    }

    /// `P(event | given)`. The two assignments must not share variables.
    pub fn query_prob(&self, event: &[(&str, u8)], given: &[(&str, u8)]) -> Result<f64, ProbError> {
        if let Some(&(name, _)) = event.iter().find(|(e, _)| given.iter().any(|(g, _)| g == e)) {
            return Err(ProbError::RepeatedVariable(name.to_string()));
        }
        let denom = self.prob(given)?;
        if denom <= 0.0 {
            return Err(ProbError::ZeroProbability);
        }
        let mut both: Vec<(&str, u8)> = event.to_vec();
        both.extend_from_slice(given);
        Ok(self.prob(&both)? / denom)
    }
}

/// Binary observations, stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<String>,
    columns: Vec<Vec<u8>>,
    seed: u64,
}

impl Dataset {
    pub fn from_rows(variables: Vec<String>, rows: &[Vec<u8>], seed: u64) -> Result<Self, ProbError> {
        let mut columns = vec![Vec::with_capacity(rows.len()); variables.len()];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(ProbError::RowArity {
                    row: r,
                    expected: variables.len(),
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(ProbError::NotBinary {
                        variable: variables[c].clone(),
                        value: v,
                    });
                }
                columns[c].push(v);
            }
        }
        Self::from_columns(variables, columns, seed)
    }

    pub fn from_columns(variables: Vec<String>, columns: Vec<Vec<u8>>, seed: u64) -> Result<Self, ProbError> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].contains(v) {
                return Err(ProbError::RepeatedVariable(v.clone()));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        for (c, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(ProbError::RowArity {
                    row: n.min(col.len()),
                    expected: n,
                    found: col.len(),
                });
            }
            if let Some(&v) = col.iter().find(|&&v| v > 1) {
                return Err(ProbError::NotBinary {
                    variable: variables[c].clone(),
                    value: v,
                });
            }
        }
        if columns.len() != variables.len() {
            return Err(ProbError::RowArity {
                row: 0,
                expected: variables.len(),
                found: columns.len(),
            });
        }
        Ok(Dataset {
            variables,
            columns,
            seed,
        })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Result<&[u8], ProbError> {
        self.variables
            .iter()
            .position(|v| v == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| ProbError::UnknownVariable(name.to_string()))
    }

    pub fn row(&self, i: usize) -> Vec<u8> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<u8>> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    /// Rows matching every `(variable, value)` pair.
    pub fn filter(&self, evidence: &[(&str, u8)]) -> Result<Dataset, ProbError> {
        let a = check_assignment(&self.variables, evidence)?;
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&r| a.iter().all(|&(c, v)| self.columns[c][r] == v))
            .collect();
        Ok(Dataset {
            variables: self.variables.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| keep.iter().map(|&r| col[r]).collect())
                .collect(),
            seed: self.seed,
        })
    }

    /// Relative frequency of every configuration.
    pub fn empirical_joint(&self) -> Result<JointTable, ProbError> {
        let k = self.variables.len();
        if k > MAX_JOINT_NODES {
            return Err(ProbError::TooManyNodes {
                nodes: k,
                limit: MAX_JOINT_NODES,
            });
        }
        let n = self.n_rows();
        if n == 0 {
            return Err(ProbError::EmptyDataset);
        }
        let mut counts = vec![0u64; 1 << k];
        for r in 0..n {
            let idx = self
                .columns
                .iter()
                .fold(0usize, |acc, col| (acc << 1) | col[r] as usize);
            counts[idx] += 1;
        }
        Ok(JointTable {
            variables: self.variables.clone(),
            mass: counts.into_iter().map(|c| c as f64 / n as f64).collect(),
        })
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Imperfect culture reference and GeneXpert index test for latent PTB.
    pub fn ptb_net() -> BayesNet {
        let dag = Dag::parse(
            "dag { PTB [role=target, latent] Culture [role=reference] GeneXpert [role=index]
                   PTB -> Culture PTB -> GeneXpert }",
        )
        .unwrap();
        BayesNet::new(
            dag,
            vec![
                Cpt::root("PTB", 0.10),
                Cpt::test("Culture", "PTB", 0.80, 0.98),
                Cpt::test("GeneXpert", "PTB", 0.90, 0.95),
            ],
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::ptb_net;
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn single(p: f64) -> BayesNet {
        let dag = Dag::parse("dag { D [role=target] }").unwrap();
        BayesNet::new(dag, vec![Cpt::root("D", p)]).unwrap()
    }

    #[test]
    fn attach_validates() {
        let net = single(0.10);
        assert_eq!(net.cpt("D").unwrap().p1, [0.10]);

        let dag = Dag::parse("dag { A B A -> B }").unwrap();
        let err = BayesNet::new(
            dag.clone(),
            vec![Cpt::root("A", 0.5), Cpt::new("B", &["C"], &[0.1, 0.2])],
        );
        assert!(matches!(err, Err(ProbError::ParentMismatch { .. })));
        let err = BayesNet::new(dag.clone(), vec![Cpt::root("A", 0.5)]);
        assert_eq!(err, Err(ProbError::MissingCpt("B".into())));
        let err = BayesNet::new(dag.clone(), vec![Cpt::root("A", 1.5), Cpt::test("B", "A", 0.9, 0.9)]);
        assert!(matches!(err, Err(ProbError::OutOfRange { .. })));
        let err = BayesNet::new(dag.clone(), vec![Cpt::root("A", 0.5), Cpt::new("B", &["A"], &[0.1])]);
        assert!(matches!(
            err,
            Err(ProbError::TableLength {
                expected: 2,
                found: 1,
                ..
            })
        ));
        let err = BayesNet::new(
            dag,
            vec![Cpt::root("A", 0.5), Cpt::test("B", "A", 0.9, 0.9), Cpt::root("Z", 0.1)],
        );
        assert_eq!(err, Err(ProbError::ExtraCpt("Z".into())));
    }

    #[test]
    fn single_node_joint() {
        let j = single(0.3).exact_joint().unwrap();
        assert_eq!(j.mass(), [0.7, 0.3]);
    }

    #[test]
    fn ptb_joint_values() {
        let j = ptb_net().exact_joint().unwrap();
        assert_eq!(j.variables(), ["PTB", "Culture", "GeneXpert"]);
        assert!(close(j.total(), 1.0, 1e-12));
        // 0.1*0.8*0.9 + 0.9*0.02*0.05
        assert!(close(
            j.prob(&[("Culture", 1), ("GeneXpert", 1)]).unwrap(),
            0.0729,
            1e-12
        ));
        let m = j.marginal(&["Culture"]).unwrap();
        assert!(close(m.mass()[1], 0.098, 1e-12));
        let (c, pe) = j.condition(&[("Culture", 1)]).unwrap();
        assert!(close(pe, 0.098, 1e-12));
        assert_eq!(c.variables(), ["PTB", "GeneXpert"]);
        let p = c.prob(&[("GeneXpert", 1)]).unwrap();
        assert!(close(p, 0.0729 / 0.098, 1e-12));
        assert!(close(p, 0.74388, 1e-5));
        assert!(close(
            j.query_prob(&[("GeneXpert", 1)], &[("Culture", 1)]).unwrap(),
            p,
            1e-15
        ));
    }

    #[test]
    fn marginal_and_condition_identities() {
        let j = ptb_net().exact_joint().unwrap();
        assert_eq!(j.marginal(&["PTB", "Culture", "GeneXpert"]).unwrap(), j);
        assert_eq!(
            j.marginal(&["GeneXpert", "PTB"]).unwrap().variables(),
            ["PTB", "GeneXpert"]
        );
        let (same, p) = j.condition(&[]).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(same.variables(), j.variables());
        assert_eq!(j.marginal(&[]), Err(ProbError::EmptySelection));
        assert_eq!(j.marginal(&["Nope"]), Err(ProbError::UnknownVariable("Nope".into())));
    }

    #[test]
    fn chain_marginal_eliminates_root() {
        let dag = Dag::parse("dag { A B A -> B }").unwrap();
        let net = BayesNet::new(dag, vec![Cpt::root("A", 0.2), Cpt::test("B", "A", 0.9, 0.7)]).unwrap();
        let m = net.exact_joint().unwrap().marginal(&["B"]).unwrap();
        assert!(close(m.mass()[1], 0.2 * 0.9 + 0.8 * 0.3, 1e-15));
    }

    #[test]
    fn zero_probability_evidence() {
        let j = single(0.0).exact_joint().unwrap();
        assert_eq!(j.condition(&[("D", 1)]), Err(ProbError::ZeroProbability));
        assert_eq!(j.query_prob(&[], &[("D", 1)]), Err(ProbError::ZeroProbability));
    }

    #[test]
    fn chain_rule_readback() {
        let net = ptb_net();
        let j = net.exact_joint().unwrap();
        for d in 0..2u8 {
            let p = j.query_prob(&[("Culture", 1)], &[("PTB", d)]).unwrap();
            assert!(close(p, net.cpt("Culture").unwrap().p1[d as usize], 1e-12));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let net = ptb_net();
        let a = net.sample(5, 11).unwrap();
        assert_eq!(a, net.sample(5, 11).unwrap());
        assert_ne!(net.sample(200, 11).unwrap(), net.sample(200, 12).unwrap());
        assert_eq!(net.sample(0, 1), Err(ProbError::NoRows));
    }

    #[test]
    fn degenerate_cpt_samples_zeros() {
        let d = single(0.0).sample(50, 3).unwrap();
        assert!(d.column("D").unwrap().iter().all(|&v| v == 0));
    }

    #[test]
    fn sampled_marginal_near_exact() {
        let d = ptb_net().sample(1_000_000, 42).unwrap();
        let frac = d.column("Culture").unwrap().iter().filter(|&&v| v == 1).count() as f64 / 1e6;
        assert!(close(frac, 0.098, 0.005), "{frac}");
        let emp = d.empirical_joint().unwrap();
        let exact = ptb_net().exact_joint().unwrap();
        let gap = emp
            .mass()
            .iter()
            .zip(exact.mass())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(gap < 0.005, "{gap}");
    }

    #[test]
    fn empirical_joint_of_small_datasets() {
        let vars = vec!["A".to_string(), "B".to_string()];
        let one = Dataset::from_rows(vars.clone(), &[vec![1, 0]], 0).unwrap();
        assert_eq!(one.empirical_joint().unwrap().mass(), [0.0, 0.0, 1.0, 0.0]);
        let two = Dataset::from_rows(vars.clone(), &[vec![1, 0], vec![1, 0]], 0).unwrap();
        assert_eq!(two.empirical_joint().unwrap(), one.empirical_joint().unwrap());
        let empty = Dataset::from_rows(vars.clone(), &[], 0).unwrap();
        assert_eq!(empty.empirical_joint(), Err(ProbError::EmptyDataset));
        assert!(matches!(
            Dataset::from_rows(vars, &[vec![2, 0]], 0),
            Err(ProbError::NotBinary { .. })
        ));
    }

    #[test]
    fn too_many_nodes() {
        let names: Vec<String> = (0..21).map(|i| alloc::format!("N{i}")).collect();
        let dag = Dag::parse(&alloc::format!("dag {{ {} }}", names.join(" "))).unwrap();
        let cpts = names.iter().map(|n| Cpt::root(n.clone(), 0.5)).collect();
        let net = BayesNet::new(dag, cpts).unwrap();
        assert!(matches!(
            net.exact_joint(),
            Err(ProbError::TooManyNodes { nodes: 21, .. })
        ));
    }
}
