use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::{Dag, GraphError, MAX_PATH_NODES};

/// Direction of one step along a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// `nodes[i] -> nodes[i + 1]`
    Forward,
    /// `nodes[i] <- nodes[i + 1]`
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathStatus {
    Open,
    Blocked,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockReason {
    /// A chain or fork node that is in the conditioning set.
    ConditionedNonCollider,
    /// A collider such that neither it nor any descendant is conditioned on.
    UnconditionedCollider,
}

impl BlockReason {
    pub fn describe(self) -> &'static str {
        match self {
            BlockReason::ConditionedNonCollider => "conditioned non-collider",
            BlockReason::UnconditionedCollider => "collider with no conditioned descendant",
        }
    }
}

/// A simple path between two nodes, ignoring edge direction, together with
/// its status relative to a conditioning set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    pub nodes: Vec<String>,
    pub steps: Vec<Step>,
    pub status: PathStatus,
    pub blockers: Vec<(String, BlockReason)>,
}

impl Path {
    pub fn is_open(&self) -> bool {
        self.status == PathStatus::Open
    }

    /// Starts with an arrow into the first node.
    pub fn is_backdoor(&self) -> bool {
        self.steps.first() == Some(&Step::Backward)
    }

    /// Every step points away from the first node.
    pub fn is_directed(&self) -> bool {
        self.steps.iter().all(|&s| s == Step::Forward)
    }

    /// Renders as `T1 <- D -> T2`.
    pub fn arrow_string(&self) -> String {
        let mut out = String::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if i > 0 {
                out.push_str(match self.steps[i - 1] {
                    Step::Forward => " -> ",
                    Step::Backward => " <- ",
                });
            }
            out.push_str(node);
        }
        out
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.arrow_string())
    }
}

impl Dag {
    fn check_path_size(&self) -> Result<(), GraphError> {
        if self.len() > MAX_PATH_NODES {
            return Err(GraphError::TooLarge {
                nodes: self.len(),
                limit: MAX_PATH_NODES,
            });
        }
        Ok(())
    }

    /// Every simple path between `x` and `y`, with status relative to the
    /// empty conditioning set. Sorted by node-name sequence.
    pub fn all_paths(&self, x: &str, y: &str) -> Result<Vec<Path>, GraphError> {
        self.paths_given(x, y, &[])
    }

    /// Every simple path between `x` and `y`, classified against `z`.
    pub fn paths_given(&self, x: &str, y: &str, z: &[&str]) -> Result<Vec<Path>, GraphError> {
        let ids = self.disjoint_sets(&[&[x], &[y], z])?;
        self.check_path_size()?;
        let (xi, yi) = (ids[0][0], ids[1][0]);
        let mut in_z = vec![false; self.len()];
        for &v in &ids[2] {
            in_z[v] = true;
        }
        // a collider is unblocked if it or a descendant is conditioned on
        let z_anc = self.ancestor_mask(&ids[2]);

        let mut raw: Vec<(Vec<usize>, Vec<Step>)> = Vec::new();
        let mut visited = vec![false; self.len()];
        let mut nodes = vec![xi];
        let mut steps = Vec::new();
        visited[xi] = true;
        self.walk(yi, &mut visited, &mut nodes, &mut steps, &mut raw);

        let mut paths: Vec<Path> = raw
            .into_iter()
            .map(|(ids, steps)| self.classify(ids, steps, &in_z, &z_anc))
            .collect();
        paths.sort_by(|a, b| a.nodes.cmp(&b.nodes));
        Ok(paths)
    }

    fn walk(
        &self,
        target: usize,
        visited: &mut [bool],
        nodes: &mut Vec<usize>,
        steps: &mut Vec<Step>,
        out: &mut Vec<(Vec<usize>, Vec<Step>)>,
    ) {
        let here = *nodes.last().expect("path is never empty");
        if here == target {
            out.push((nodes.clone(), steps.clone()));
            return;
        }
        let forward = self.child_ids(here).iter().map(|&c| (c, Step::Forward));
        let backward = self.parent_ids(here).iter().map(|&p| (p, Step::Backward));
        for (next, step) in forward.chain(backward) {
            if visited[next] {
                continue;
            }
            visited[next] = true;
            nodes.push(next);
            steps.push(step);
            self.walk(target, visited, nodes, steps, out);
            steps.pop();
            nodes.pop();
            visited[next] = false;
        }
    }

    fn classify(&self, ids: Vec<usize>, steps: Vec<Step>, in_z: &[bool], z_anc: &[bool]) -> Path {
        let mut blockers = Vec::new();
        for k in 1..ids.len().saturating_sub(1) {
            let v = ids[k];
            let collider = steps[k - 1] == Step::Forward && steps[k] == Step::Backward;
            if collider {
                if !z_anc[v] {
                    blockers.push((self.name(v).to_string(), BlockReason::UnconditionedCollider));
                }
            } else if in_z[v] {
                blockers.push((self.name(v).to_string(), BlockReason::ConditionedNonCollider));
            }
        }
        Path {
            nodes: ids.iter().map(|&i| self.name(i).to_string()).collect(),
            steps,
            status: if blockers.is_empty() {
                PathStatus::Open
            } else {
                PathStatus::Blocked
            },
            blockers,
        }
    }

    /// The paths between `x` and `y` that remain open given `z`; empty
    /// exactly when `x` and `y` are d-separated by `z`.
    pub fn open_paths(&self, x: &str, y: &str, z: &[&str]) -> Result<Vec<Path>, GraphError> {
        let mut paths = self.paths_given(x, y, z)?;
        paths.retain(Path::is_open);
        Ok(paths)
    }

    /// Open paths given `z` that leave `x` against an arrow (`x <- ...`).
    pub fn backdoor_paths(&self, x: &str, y: &str, z: &[&str]) -> Result<Vec<Path>, GraphError> {
        let mut paths = self.open_paths(x, y, z)?;
        paths.retain(Path::is_backdoor);
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn strings(paths: &[Path]) -> Vec<String> {
        paths.iter().map(Path::arrow_string).collect()
    }

    #[test]
    fn single_backdoor_through_target() {
        let g = reference_error();
        assert_eq!(strings(&g.all_paths("T1", "T2").unwrap()), ["T1 <- D -> T2"]);
        assert_eq!(strings(&g.backdoor_paths("T1", "T2", &[]).unwrap()), ["T1 <- D -> T2"]);
    }

    #[test]
    fn conditional_dependence_adds_second_channel() {
        let g = conditional_dependence();
        assert_eq!(
            strings(&g.all_paths("T1", "T2").unwrap()),
            ["T1 <- D -> T2", "T1 <- R -> T2"]
        );
        assert_eq!(strings(&g.open_paths("T1", "T2", &["D"]).unwrap()), ["T1 <- R -> T2"]);
    }

    #[test]
    fn disconnected_pair_has_no_paths() {
        let g = dag("dag { A B }");
        assert!(g.all_paths("A", "B").unwrap().is_empty());
    }

    #[test]
    fn confounding_paths() {
        let g = confounding(true);
        let open = strings(&g.open_paths("D", "T2", &[]).unwrap());
        assert_eq!(open, ["D <- R -> T2", "D -> T2"]);
        assert_eq!(strings(&g.open_paths("D", "T2", &["R"]).unwrap()), ["D -> T2"]);
        assert_eq!(strings(&g.backdoor_paths("D", "T2", &[]).unwrap()), ["D <- R -> T2"]);

        let blocked = g.paths_given("D", "T2", &["R"]).unwrap();
        let back = blocked.iter().find(|p| p.is_backdoor()).unwrap();
        assert_eq!(back.status, PathStatus::Blocked);
        assert_eq!(back.blockers, [("R".to_string(), BlockReason::ConditionedNonCollider)]);
    }

    #[test]
    fn chain_blocked_by_middle() {
        assert!(chain().open_paths("A", "C", &["B"]).unwrap().is_empty());
        assert_eq!(chain().open_paths("A", "C", &[]).unwrap().len(), 1);
    }

    #[test]
    fn no_backdoor_without_incoming_edge() {
        let g = dag("dag { D T2 D -> T2 }");
        assert!(g.backdoor_paths("D", "T2", &[]).unwrap().is_empty());
    }

    #[test]
    fn collider_blocks_until_descendant_conditioned() {
        let g = dag("dag { A B C E A -> B C -> B B -> E }");
        let p = &g.all_paths("A", "C").unwrap()[0];
        assert_eq!(p.blockers, [("B".to_string(), BlockReason::UnconditionedCollider)]);
        assert!(g.paths_given("A", "C", &["E"]).unwrap()[0].is_open());
    }

    #[test]
    fn rejects_bad_queries() {
        let g = chain();
        assert!(matches!(g.all_paths("A", "A"), Err(GraphError::OverlappingSets(_))));
        assert!(matches!(
            g.open_paths("A", "C", &["A"]),
            Err(GraphError::OverlappingSets(_))
        ));
        assert!(matches!(g.all_paths("A", "Q"), Err(GraphError::UnknownNode(_))));
        let names: Vec<String> = (0..17).map(|i| alloc::format!("N{i}")).collect();
        let text = alloc::format!("dag {{ {} }}", names.join(" "));
        assert!(matches!(
            dag(&text).all_paths("N0", "N1"),
            Err(GraphError::TooLarge { nodes: 17, .. })
        ));
    }
}
