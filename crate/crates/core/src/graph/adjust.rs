use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::Serialize;

use super::{Dag, GraphError};

/// Result of a minimal adjustment set search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustmentSets {
    /// Inclusion-minimal sets, sorted by size then lexicographically.
    /// `[{}]` when no backdoor path needs blocking.
    Sets(Vec<BTreeSet<String>>),
    /// Some backdoor path can only be blocked through latent nodes.
    NoObservedSet,
}

impl AdjustmentSets {
    pub fn sets(&self) -> &[BTreeSet<String>] {
        match self {
            AdjustmentSets::Sets(s) => s,
            AdjustmentSets::NoObservedSet => &[],
        }
    }
}

impl Dag {
    /// Every inclusion-minimal set of observed nodes (excluding `x`, `y` and
    /// descendants of `x`) that blocks all backdoor paths from `x` to `y`.
    pub fn minimal_adjustment_sets(&self, x: &str, y: &str) -> Result<AdjustmentSets, GraphError> {
        let ids = self.disjoint_sets(&[&[x], &[y]])?;
        let xi = ids[0][0];
        let yi = ids[1][0];
        if self.backdoor_paths(x, y, &[])?.is_empty() {
            return Ok(AdjustmentSets::Sets(alloc::vec![BTreeSet::new()]));
        }
        let desc = self.descendant_mask(&[xi]);
        let mut candidates: Vec<&str> = (0..self.len())
            .filter(|&v| v != xi && v != yi && !desc[v] && self.nodes()[v].observed)
            .map(|v| self.name(v))
            .collect();
        candidates.sort_unstable();

        let k = candidates.len();
        let mut by_size: Vec<u32> = (0..(1u32 << k)).collect();
        by_size.sort_by_key(|m| m.count_ones());

        let mut minimal: Vec<u32> = Vec::new();
        for mask in by_size {
            // skip supersets of sets already found
            if minimal.iter().any(|&m| (mask | m) == mask) {
                continue;
            }
            let z: Vec<&str> = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| candidates[i]).collect();
            if self.backdoor_paths(x, y, &z)?.is_empty() {
                minimal.push(mask);
            }
        }
        if minimal.is_empty() {
            return Ok(AdjustmentSets::NoObservedSet);
        }
        let mut sets: Vec<BTreeSet<String>> = minimal
            .into_iter()
            .map(|mask| {
                (0..k)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| String::from(candidates[i]))
                    .collect()
            })
            .collect();
        sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(AdjustmentSets::Sets(sets))
    }
}
