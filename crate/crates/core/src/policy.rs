//! Tabular policies: one probability vector per infoset.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::PolicyError;
use crate::tree::{GameTree, InfosetId};

/// A behavioral policy stored as a flat slot array laid out by
/// [`GameTree::action_slot`]. Rows of unchanged infosets compare bitwise
/// equal across clones, which the density code relies on to make the
/// "no local change" short-circuit exact.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probs: Vec<f64>,
}

impl TabularPolicy {
    pub fn uniform(tree: &GameTree) -> Self {
        let mut probs = vec![0.0; tree.total_action_slots()];
        for iset in tree.infosets() {
            let p = 1.0 / iset.n_actions() as f64;
            for slot in tree.infoset_slots(iset.id) {
                probs[slot] = p;
            }
        }
        TabularPolicy { probs }
    }

    /// Random interior distributions (normalized positive draws).
    pub fn random_mixed(tree: &GameTree, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut probs = vec![0.0; tree.total_action_slots()];
        for iset in tree.infosets() {
            let slots = tree.infoset_slots(iset.id);
            let mut sum = 0.0;
            for slot in slots.clone() {
                let w = rng.gen_range(0.05..1.0);
                probs[slot] = w;
                sum += w;
            }
            for slot in slots {
                probs[slot] /= sum;
            }
        }
        let policy = TabularPolicy { probs };
        debug_assert!(policy.validate(tree).is_ok());
        policy
    }

    /// Random deterministic policy: one uniformly drawn action per infoset.
    pub fn random_pure(tree: &GameTree, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut policy = TabularPolicy { probs: vec![0.0; tree.total_action_slots()] };
        for iset in tree.infosets() {
            let a = rng.gen_range(0..iset.n_actions());
            policy.set_one_hot(tree, iset.id, a);
        }
        policy
    }

    pub fn row(&self, tree: &GameTree, infoset: InfosetId) -> &[f64] {
        &self.probs[tree.infoset_slots(infoset)]
    }

    pub fn row_mut(&mut self, tree: &GameTree, infoset: InfosetId) -> &mut [f64] {
        &mut self.probs[tree.infoset_slots(infoset)]
    }

    pub fn set_one_hot(&mut self, tree: &GameTree, infoset: InfosetId, action: usize) {
        let row = self.row_mut(tree, infoset);
        row.fill(0.0);
        row[action] = 1.0;
    }

    /// Exact (bitwise) per-row equality, used for the local-change test.
    pub fn row_equals(&self, other: &TabularPolicy, tree: &GameTree, infoset: InfosetId) -> bool {
        self.row(tree, infoset) == other.row(tree, infoset)
    }

    pub fn slots(&self) -> &[f64] {
        &self.probs
    }

    pub fn slots_mut(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn from_slots(probs: Vec<f64>) -> Self {
        TabularPolicy { probs }
    }

    pub fn validate(&self, tree: &GameTree) -> Result<(), PolicyError> {
        if self.probs.len() != tree.total_action_slots() {
            return Err(PolicyError::WrongInfosetCount {
                got: self.probs.len(),
                expected: tree.total_action_slots(),
            });
        }
        for iset in tree.infosets() {
            let row = self.row(tree, iset.id);
            if row.len() != iset.n_actions() {
                return Err(PolicyError::WrongLength {
                    infoset: iset.id,
                    got: row.len(),
                    expected: iset.n_actions(),
                });
            }
            let mut sum = 0.0;
            for &p in row {
                if p < 0.0 {
                    return Err(PolicyError::Negative { infoset: iset.id, value: p });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(PolicyError::NotNormalized { infoset: iset.id, sum });
            }
        }
        Ok(())
    }

    /// Serialize as a JSON object mapping infoset key to its action
    /// distribution, keys sorted for reproducible output.
    pub fn to_json(&self, tree: &GameTree) -> String {
        let map: BTreeMap<&str, &[f64]> = tree
            .infosets()
            .iter()
            .map(|i| (i.key.as_str(), self.row(tree, i.id)))
            .collect();
        serde_json::to_string_pretty(&map).expect("policy serialization cannot fail")
    }

    /// Inverse of [`TabularPolicy::to_json`]. Every infoset of the tree
    /// must be present.
    pub fn from_json(tree: &GameTree, json: &str) -> Result<Self, PolicyError> {
        let map: BTreeMap<String, Vec<f64>> =
            serde_json::from_str(json).map_err(|e| PolicyError::Malformed(e.to_string()))?;
        let mut policy = TabularPolicy { probs: vec![0.0; tree.total_action_slots()] };
        let mut covered = 0usize;
        for (key, row) in &map {
            let id = tree
                .infoset_by_key(key)
                .ok_or_else(|| PolicyError::UnknownKey(key.clone()))?;
            let expected = tree.infoset(id).n_actions();
            if row.len() != expected {
                return Err(PolicyError::WrongLength { infoset: id, got: row.len(), expected });
            }
            policy.row_mut(tree, id).copy_from_slice(row);
            covered += 1;
        }
        if covered != tree.n_infosets() {
            return Err(PolicyError::WrongInfosetCount {
                got: covered,
                expected: tree.n_infosets(),
            });
        }
        policy.validate(tree)?;
        Ok(policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::simple_bidding;
    use crate::tree::{build_tree, BuildOptions};

    #[test]
    fn uniform_policy_is_valid() {
        let tree = build_tree(&simple_bidding(4).unwrap(), &BuildOptions::default()).unwrap();
        let p = TabularPolicy::uniform(&tree);
        p.validate(&tree).unwrap();
    }

    #[test]
    fn json_round_trip_preserves_rows() {
        let tree = build_tree(&simple_bidding(4).unwrap(), &BuildOptions::default()).unwrap();
        let p = TabularPolicy::random_mixed(&tree, 7);
        let q = TabularPolicy::from_json(&tree, &p.to_json(&tree)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn random_pure_is_deterministic_per_seed() {
        let tree = build_tree(&simple_bidding(4).unwrap(), &BuildOptions::default()).unwrap();
        assert_eq!(TabularPolicy::random_pure(&tree, 3), TabularPolicy::random_pure(&tree, 3));
        assert_ne!(TabularPolicy::random_pure(&tree, 3), TabularPolicy::random_pure(&tree, 4));
    }
}
