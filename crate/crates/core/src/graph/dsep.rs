use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use super::{Dag, GraphError};

impl Dag {
    /// `true` iff every path between a node of `x` and a node of `y` is
    /// blocked by `z`.
    ///
    /// Works on the moral graph of the ancestral set of `x ∪ y ∪ z`: `x` and
    /// `y` are d-separated exactly when `z` separates them there.
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool, GraphError> {
        if x.is_empty() || y.is_empty() {
            return Err(GraphError::EmptySet);
        }
        let ids = self.disjoint_sets(&[x, y, z])?;
        let (xs, ys, zs) = (&ids[0], &ids[1], &ids[2]);

        let mut seeds = Vec::with_capacity(xs.len() + ys.len() + zs.len());
        seeds.extend_from_slice(xs);
        seeds.extend_from_slice(ys);
        seeds.extend_from_slice(zs);
        let keep = self.ancestor_mask(&seeds);

        let n = self.len();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for v in (0..n).filter(|&v| keep[v]) {
            let parents: Vec<usize> = self.parent_ids(v).iter().copied().filter(|&p| keep[p]).collect();
            for (i, &p) in parents.iter().enumerate() {
                adj[v].insert(p);
                adj[p].insert(v);
                for &q in &parents[i + 1..] {
                    adj[p].insert(q);
                    adj[q].insert(p);
                }
            }
        }

        let mut blocked = vec![false; n];
        for &v in zs {
            blocked[v] = true;
        }
        let mut target = vec![false; n];
        for &v in ys {
            target[v] = true;
        }
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = xs.clone();
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            if target[v] {
                return Ok(false);
            }
            seen[v] = true;
            stack.extend(adj[v].iter().copied().filter(|&u| !seen[u] && !blocked[u]));
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn reference_tests_independent_given_target() {
        assert!(reference_error().d_separated(&["T1"], &["T2"], &["D"]).unwrap());
        assert!(!reference_error().d_separated(&["T1"], &["T2"], &[]).unwrap());
    }

    #[test]
    fn common_cause_breaks_conditional_independence() {
        assert!(!conditional_dependence().d_separated(&["T1"], &["T2"], &["D"]).unwrap());
        assert!(conditional_dependence()
            .d_separated(&["T1"], &["T2"], &["D", "R"])
            .unwrap());
    }

    #[test]
    fn collider_rule() {
        let g = collider();
        assert!(g.d_separated(&["A"], &["C"], &[]).unwrap());
        assert!(!g.d_separated(&["A"], &["C"], &["B"]).unwrap());
    }

    #[test]
    fn set_arguments() {
        let g = conditional_dependence();
        assert!(g.d_separated(&["T1", "D"], &["R"], &[]).is_ok());
        assert!(!g.d_separated(&["T1", "D"], &["R"], &[]).unwrap());
        assert_eq!(g.d_separated(&[], &["R"], &[]), Err(GraphError::EmptySet));
        assert!(matches!(
            g.d_separated(&["T1"], &["T2"], &["T1"]),
            Err(GraphError::OverlappingSets(_))
        ));
    }

    #[test]
    fn symmetric_on_fixtures() {
        for g in [
            chain(),
            collider(),
            reference_error(),
            conditional_dependence(),
            confounding(true),
        ] {
            let names: Vec<&str> = g.nodes().iter().map(|n| n.name.as_str()).collect();
            for &a in &names {
                for &b in &names {
                    if a == b {
                        continue;
                    }
                    let rest: Vec<&str> = names.iter().copied().filter(|&c| c != a && c != b).collect();
                    for mask in 0..(1u32 << rest.len()) {
                        let z: Vec<&str> = rest
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| mask >> i & 1 == 1)
                            .map(|(_, &c)| c)
                            .collect();
                        assert_eq!(
                            g.d_separated(&[a], &[b], &z).unwrap(),
                            g.d_separated(&[b], &[a], &z).unwrap()
                        );
                        assert_eq!(
                            g.d_separated(&[a], &[b], &z).unwrap(),
                            g.open_paths(a, b, &z).unwrap().is_empty()
                        );
                    }
                }
            }
        }
    }
}
