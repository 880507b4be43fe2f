//! Exact policy evaluation: reachability and value sweeps plus infoset
//! aggregates.
//!
//! Reachability here is *total* reachability: it includes chance
//! probabilities and both players' action probabilities.

use crate::policy::TabularPolicy;
use crate::tree::{GameTree, NodeData, NodeId};

/// Everything `evaluate` computes for one (tree, policy) pair.
///
/// Per-node arrays are indexed by node id; per-infoset arrays by infoset
/// id; `infoset_q` and `cond_q` use the tree's flat action-slot layout.
#[derive(Debug, Clone)]
pub struct EvalCache {
    /// Total reachability of each node.
    pub reach: Vec<f64>,
    /// Expected reward from each node onward.
    pub value: Vec<f64>,
    /// Infoset reachability: sum of member reach.
    pub infoset_reach: Vec<f64>,
    /// Reach-weighted infoset value: sum of member reach times value.
    pub infoset_value: Vec<f64>,
    /// Reach-weighted action value per slot.
    pub infoset_q: Vec<f64>,
    /// Conditional infoset value (0 where the infoset is unreached).
    pub cond_v: Vec<f64>,
    /// Conditional action value per slot (0 where unreached).
    pub cond_q: Vec<f64>,
}

/// One downward reach sweep and one upward value sweep; `O(nodes)`.
pub fn evaluate(tree: &GameTree, policy: &TabularPolicy) -> EvalCache {
    debug_assert_eq!(policy.slots().len(), tree.total_action_slots());
    let n = tree.n_nodes();
    let mut reach = vec![0.0; n];
    let mut value = vec![0.0; n];
    reach[0] = 1.0;

    // Downward: breadth-first ids guarantee parents precede children.
    for id in 0..n {
        let node = tree.node(id as NodeId);
        match node.data {
            NodeData::Chance => {
                for (off, child) in node.children().enumerate() {
                    reach[child as usize] = reach[id] * tree.chance_probs()[off];
                }
            }
            NodeData::Decision { infoset, .. } => {
                let row = policy.row(tree, infoset);
                for (off, child) in node.children().enumerate() {
                    reach[child as usize] = reach[id] * row[off];
                }
            }
            NodeData::Terminal { .. } => {}
        }
    }

    // Upward: children precede parents in reverse order.
    for id in (0..n).rev() {
        let node = tree.node(id as NodeId);
        match node.data {
            NodeData::Terminal { reward } => value[id] = reward,
            NodeData::Chance => {
                let mut v = 0.0;
                for (off, child) in node.children().enumerate() {
                    v += tree.chance_probs()[off] * value[child as usize];
                }
                value[id] = v;
            }
            NodeData::Decision { infoset, .. } => {
                let row = policy.row(tree, infoset);
                let mut v = 0.0;
                for (off, child) in node.children().enumerate() {
                    v += row[off] * value[child as usize];
                }
                value[id] = v;
            }
        }
    }

    // Infoset aggregates.
    let mut infoset_reach = vec![0.0; tree.n_infosets()];
    let mut infoset_value = vec![0.0; tree.n_infosets()];
    let mut infoset_q = vec![0.0; tree.total_action_slots()];
    for &id in tree.decision_nodes() {
        let node = tree.node(id);
        let infoset = node.infoset().unwrap() as usize;
        let r = reach[id as usize];
        infoset_reach[infoset] += r;
        infoset_value[infoset] += r * value[id as usize];
        let base = tree.action_slot(infoset as u32, 0);
        for (off, child) in node.children().enumerate() {
            infoset_q[base + off] += r * value[child as usize];
        }
    }

    let mut cond_v = vec![0.0; tree.n_infosets()];
    let mut cond_q = vec![0.0; tree.total_action_slots()];
    for iset in tree.infosets() {
        let r = infoset_reach[iset.id as usize];
        if r > 0.0 {
            cond_v[iset.id as usize] = infoset_value[iset.id as usize] / r;
            for slot in tree.infoset_slots(iset.id) {
                cond_q[slot] = infoset_q[slot] / r;
            }
        }
    }

    EvalCache { reach, value, infoset_reach, infoset_value, infoset_q, cond_v, cond_q }
}

/// Expected game value of a policy: the root value of a single upward
/// sweep.
pub fn game_value(tree: &GameTree, policy: &TabularPolicy) -> f64 {
    let n = tree.n_nodes();
    let mut value = vec![0.0; n];
    for id in (0..n).rev() {
        let node = tree.node(id as NodeId);
        match node.data {
            NodeData::Terminal { reward } => value[id] = reward,
            NodeData::Chance => {
                value[id] = node
                    .children()
                    .enumerate()
                    .map(|(off, c)| tree.chance_probs()[off] * value[c as usize])
                    .sum();
            }
            NodeData::Decision { infoset, .. } => {
                let row = policy.row(tree, infoset);
                value[id] = node
                    .children()
                    .enumerate()
                    .map(|(off, c)| row[off] * value[c as usize])
                    .sum();
            }
        }
    }
    value[0]
}

/// Reachability sweep only (used for altered-reach fields).
pub fn reach_only(tree: &GameTree, policy: &TabularPolicy) -> Vec<f64> {
    let n = tree.n_nodes();
    let mut reach = vec![0.0; n];
    reach[0] = 1.0;
    for id in 0..n {
        let node = tree.node(id as NodeId);
        match node.data {
            NodeData::Chance => {
                for (off, child) in node.children().enumerate() {
                    reach[child as usize] = reach[id] * tree.chance_probs()[off];
                }
            }
            NodeData::Decision { infoset, .. } => {
                let row = policy.row(tree, infoset);
                for (off, child) in node.children().enumerate() {
                    reach[child as usize] = reach[id] * row[off];
                }
            }
            NodeData::Terminal { .. } => {}
        }
    }
    reach
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{comm_game, simple_bidding, GameSpec};
    use crate::tree::{build_tree, BuildOptions};

    fn build(spec: &dyn GameSpec) -> GameTree {
        build_tree(spec, &BuildOptions::default()).unwrap()
    }

    #[test]
    fn terminal_reach_is_conserved() {
        for seed in 0..5 {
            let tree = build(&simple_bidding(4).unwrap());
            let policy = TabularPolicy::random_mixed(&tree, seed);
            let cache = evaluate(&tree, &policy);
            let total: f64 = tree
                .nodes()
                .iter()
                .enumerate()
                .filter(|(_, n)| n.is_terminal())
                .map(|(id, _)| cache.reach[id])
                .sum();
            assert!((total - 1.0).abs() < 1e-10, "seed {seed}: {total}");
        }
    }

    #[test]
    fn uniform_comm_value_is_uniform_guess() {
        let tree = build(&comm_game(3).unwrap());
        let policy = TabularPolicy::uniform(&tree);
        let v = game_value(&tree, &policy);
        assert!((v - 0.125).abs() < 1e-12);
    }

    #[test]
    fn optimal_comm_encoding_scores_one() {
        // Identity encoding: signal the secret's bits; guess the signal
        // string read back as a number.
        let game = comm_game(3).unwrap();
        let tree = build(&game);
        let mut policy = TabularPolicy::uniform(&tree);
        for iset in tree.infosets() {
            // Keys: sender "P1|s{secret}|{signals}", guesser "P2|{signals}".
            let rest = &iset.key[3..];
            if iset.player == 0 {
                let bar = rest.find('|').unwrap();
                let secret: u32 = rest[1..bar].parse().unwrap();
                let sent = rest.len() - bar - 1;
                let bit = (secret >> (2 - sent)) & 1; // most significant bit first
                policy.set_one_hot(&tree, iset.id, bit as usize);
            } else {
                let guess = u32::from_str_radix(rest, 2).unwrap();
                policy.set_one_hot(&tree, iset.id, guess as usize);
            }
        }
        assert!((game_value(&tree, &policy) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn value_recomputation_matches_cache() {
        let tree = build(&simple_bidding(4).unwrap());
        let policy = TabularPolicy::random_mixed(&tree, 11);
        let cache = evaluate(&tree, &policy);
        for (id, node) in tree.nodes().iter().enumerate() {
            let recomputed = match node.data {
                NodeData::Terminal { reward } => reward,
                NodeData::Chance => node
                    .children()
                    .enumerate()
                    .map(|(off, c)| tree.chance_probs()[off] * cache.value[c as usize])
                    .sum(),
                NodeData::Decision { infoset, .. } => {
                    let row = policy.row(&tree, infoset);
                    node.children()
                        .enumerate()
                        .map(|(off, c)| row[off] * cache.value[c as usize])
                        .sum()
                }
            };
            let diff = (recomputed - cache.value[id]).abs();
            assert!(diff <= 1e-12 * recomputed.abs().max(1.0));
        }
    }
}
