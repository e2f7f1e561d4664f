//! Role-labeled causal DAGs.

mod adjust;
mod dsep;
mod parse;
mod paths;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adjust::AdjustmentSets;
pub use paths::{BlockReason, Path, PathStatus, Step};

/// Path enumeration is exponential; graphs beyond this size are rejected by
/// the path-based queries.
pub const MAX_PATH_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge `{0} -> {1}`")]
    DuplicateEdge(String, String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("graph has {nodes} nodes; path queries support at most {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error("node sets overlap on `{0}`")]
    OverlappingSets(String),
    #[error("node set must not be empty")]
    EmptySet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Target,
    ReferenceTest,
    IndexTest,
    Covariate,
    Selection,
    Other,
}

impl NodeRole {
    /// Keyword used by the DAG text syntax.
    pub fn keyword(self) -> &'static str {
        match self {
            NodeRole::Target => "target",
            NodeRole::ReferenceTest => "reference",
            NodeRole::IndexTest => "index",
            NodeRole::Covariate => "covariate",
            NodeRole::Selection => "selection",
            NodeRole::Other => "other",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "target" => NodeRole::Target,
            "reference" => NodeRole::ReferenceTest,
            "index" => NodeRole::IndexTest,
            "covariate" => NodeRole::Covariate,
            "selection" => NodeRole::Selection,
            "other" => NodeRole::Other,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    pub role: NodeRole,
    /// `false` for latent variables.
    pub observed: bool,
}

impl Node {
    pub fn new(name: impl Into<String>, role: NodeRole, observed: bool) -> Self {
        Node {
            name: name.into(),
            role,
            observed,
        }
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A validated directed acyclic graph over named nodes.
///
/// Node order is declaration order; edges keep insertion order. All queries
/// are pure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    nodes: Vec<Node>,
    edges: Vec<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
}

impl Dag {
    /// Builds a graph, rejecting bad names, duplicates, self-loops, unknown
    /// endpoints and cycles.
    pub fn new<S: AsRef<str>>(nodes: Vec<Node>, edges: &[(S, S)]) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if !is_identifier(&node.name) {
                return Err(GraphError::InvalidName(node.name.clone()));
            }
            if index.insert(node.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(node.name.clone()));
            }
        }
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut edge_ids = Vec::with_capacity(edges.len());
        for (from, to) in edges {
            let (from, to) = (from.as_ref(), to.as_ref());
            let u = *index
                .get(from)
                .ok_or_else(|| GraphError::UnknownNode(from.to_string()))?;
            let v = *index.get(to).ok_or_else(|| GraphError::UnknownNode(to.to_string()))?;
            if u == v {
                return Err(GraphError::SelfLoop(from.to_string()));
            }
            if children[u].contains(&v) {
                return Err(GraphError::DuplicateEdge(from.to_string(), to.to_string()));
            }
            children[u].push(v);
            parents[v].push(u);
            edge_ids.push((u, v));
        }
        let dag = Dag {
            nodes,
            edges: edge_ids,
            parents,
            children,
            index,
        };
        if let Some(cycle) = dag.find_cycle() {
            return Err(GraphError::Cycle(
                cycle.into_iter().map(|i| dag.nodes[i].name.clone()).collect(),
            ));
        }
        Ok(dag)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges as `(parent, child)` name pairs in insertion order.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.edges
            .iter()
            .map(move |&(u, v)| (self.nodes[u].name.as_str(), self.nodes[v].name.as_str()))
    }

    pub fn node(&self, name: &str) -> Result<&Node, GraphError> {
        self.id(name).map(|i| &self.nodes[i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub(crate) fn id(&self, name: &str) -> Result<usize, GraphError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub(crate) fn name(&self, id: usize) -> &str {
        &self.nodes[id].name
    }

    pub(crate) fn parent_ids(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub(crate) fn child_ids(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// Parent names in edge insertion order.
    pub fn parents(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let id = self.id(name)?;
        Ok(self.parents[id].iter().map(|&p| self.name(p)).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<&str>, GraphError> {
        let id = self.id(name)?;
        Ok(self.children[id].iter().map(|&c| self.name(c)).collect())
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.id(from), self.id(to)) {
            (Ok(u), Ok(v)) => self.children[u].contains(&v),
            _ => false,
        }
    }

    /// Nodes with a directed path to `name`, excluding `name` itself.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<String>, GraphError> {
        let id = self.id(name)?;
        let mask = self.reach_mask(&[id], |v| &self.parents[v]);
        Ok(self.names_of(&mask, Some(id)))
    }

    /// Nodes reachable from `name` by a directed path, excluding `name` itself.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<String>, GraphError> {
        let id = self.id(name)?;
        let mask = self.reach_mask(&[id], |v| &self.children[v]);
        Ok(self.names_of(&mask, Some(id)))
    }

    fn names_of(&self, mask: &[bool], skip: Option<usize>) -> BTreeSet<String> {
        mask.iter()
            .enumerate()
            .filter(|&(i, &m)| m && Some(i) != skip)
            .map(|(i, _)| self.nodes[i].name.clone())
            .collect()
    }

    /// Seeds plus everything reachable through `next`.
    pub(crate) fn reach_mask<'a, F>(&'a self, seeds: &[usize], next: F) -> Vec<bool>
    where
        F: Fn(usize) -> &'a [usize],
    {
        let mut mask = vec![false; self.nodes.len()];
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(v) = stack.pop() {
            if mask[v] {
                continue;
            }
            mask[v] = true;
            stack.extend(next(v).iter().copied().filter(|&u| !mask[u]));
        }
        mask
    }

    pub(crate) fn ancestor_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.reach_mask(seeds, |v| &self.parents[v])
    }

    pub(crate) fn descendant_mask(&self, seeds: &[usize]) -> Vec<bool> {
        self.reach_mask(seeds, |v| &self.children[v])
    }

    /// Kahn's algorithm, always taking the earliest-declared ready node.
    pub fn topological_order(&self) -> Vec<&str> {
        self.topo_ids().into_iter().map(|i| self.name(i)).collect()
    }

    pub(crate) fn topo_ids(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop_first() {
            order.push(v);
            for &c in &self.children[v] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        order
    }

    fn find_cycle(&self) -> Option<Vec<usize>> {
        // 0 = unvisited, 1 = on stack, 2 = done
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut stack_path: Vec<usize> = Vec::new();
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut work: Vec<(usize, usize)> = vec![(root, 0)];
            state[root] = 1;
            stack_path.push(root);
            while let Some(&mut (v, ref mut next)) = work.last_mut() {
                if let Some(&c) = self.children[v].get(*next) {
                    *next += 1;
                    match state[c] {
                        0 => {
                            state[c] = 1;
                            stack_path.push(c);
                            work.push((c, 0));
                        }
                        1 => {
                            let start = stack_path.iter().position(|&x| x == c).unwrap_or(0);
                            let mut cycle = stack_path[start..].to_vec();
                            cycle.push(c);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[v] = 2;
                    stack_path.pop();
                    work.pop();
                }
            }
        }
        None
    }

    pub(crate) fn ids_of(&self, names: &[&str]) -> Result<Vec<usize>, GraphError> {
        names.iter().map(|n| self.id(n)).collect()
    }

    /// Checks that the named sets exist and are pairwise disjoint.
    pub(crate) fn disjoint_sets(&self, sets: &[&[&str]]) -> Result<Vec<Vec<usize>>, GraphError> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            let ids = self.ids_of(set)?;
            let mut local = BTreeSet::new();
            for &i in &ids {
                if !local.insert(i) {
                    continue;
                }
                if seen[i] {
                    return Err(GraphError::OverlappingSets(self.name(i).to_string()));
                }
                seen[i] = true;
            }
            out.push(local.into_iter().collect());
        }
        Ok(out)
    }

    /// Serializes to the DAG text syntax; [`Dag::parse`] reads it back.
    pub fn to_syntax(&self) -> String {
        let mut out = String::from("dag {\n");
        for node in &self.nodes {
            out.push_str("  ");
            out.push_str(&node.name);
            out.push_str(" [role=");
            out.push_str(node.role.keyword());
            if !node.observed {
                out.push_str(", latent");
            }
            out.push_str("]\n");
        }
        for (u, v) in self.edges() {
            out.push_str("  ");
            out.push_str(u);
            out.push_str(" -> ");
            out.push_str(v);
            out.push('\n');
        }
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_syntax())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn dag(text: &str) -> Dag {
        Dag::parse(text).expect("fixture parses")
    }

    pub fn chain() -> Dag {
        dag("dag { A B C A -> B B -> C }")
    }

    pub fn reference_error() -> Dag {
        dag("dag { D [role=target, latent] T1 [role=reference] T2 [role=index] D -> T1 D -> T2 }")
    }

    pub fn conditional_dependence() -> Dag {
        dag(
            "dag { D [role=target, latent] T1 [role=reference] T2 [role=index] R [role=covariate, latent]
                   D -> T1 D -> T2 R -> T1 R -> T2 }",
        )
    }

    pub fn confounding(r_observed: bool) -> Dag {
        let r = if r_observed {
            "R [role=covariate]"
        } else {
            "R [role=covariate, latent]"
        };
        dag(&alloc::format!(
            "dag {{ D [role=target] T2 [role=index] {r} R -> D R -> T2 D -> T2 }}"
        ))
    }

    pub fn collider() -> Dag {
        dag("dag { A B C A -> B C -> B }")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn ancestors_of_chain_end() {
        assert_eq!(chain().ancestors("C").unwrap(), set(&["A", "B"]));
        assert_eq!(chain().ancestors("A").unwrap(), set(&[]));
        assert_eq!(chain().descendants("A").unwrap(), set(&["B", "C"]));
    }

    #[test]
    fn ancestors_in_confounding_dag() {
        assert_eq!(confounding(true).ancestors("T2").unwrap(), set(&["D", "R"]));
    }

    #[test]
    fn unknown_node_is_an_error() {
        assert_eq!(chain().ancestors("Z"), Err(GraphError::UnknownNode("Z".into())));
    }

    #[test]
    fn rejects_structural_errors() {
        let nodes = || {
            vec![
                Node::new("A", NodeRole::Other, true),
                Node::new("B", NodeRole::Other, true),
            ]
        };
        assert!(matches!(Dag::new(nodes(), &[("A", "A")]), Err(GraphError::SelfLoop(_))));
        assert!(matches!(
            Dag::new(nodes(), &[("A", "B"), ("A", "B")]),
            Err(GraphError::DuplicateEdge(..))
        ));
        assert!(matches!(
            Dag::new(nodes(), &[("A", "C")]),
            Err(GraphError::UnknownNode(_))
        ));
        assert!(matches!(
            Dag::new(vec![Node::new("1x", NodeRole::Other, true)], &[] as &[(&str, &str)]),
            Err(GraphError::InvalidName(_))
        ));
        match Dag::new(nodes(), &[("A", "B"), ("B", "A")]) {
            Err(GraphError::Cycle(c)) => assert_eq!(c, ["A", "B", "A"]),
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn topological_order_prefers_declaration_order() {
        let g = dag("dag { C B A C -> A B -> A }");
        assert_eq!(g.topological_order(), ["C", "B", "A"]);
        let g = dag("dag { T2 D D -> T2 }");
        assert_eq!(g.topological_order(), ["D", "T2"]);
    }
}
