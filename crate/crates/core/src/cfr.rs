//! Vanilla counterfactual regret minimization with regret matching,
//! simultaneous updates, and a linearly weighted average strategy.
//!
//! Determinism given a seed: the seed only controls a tiny Dirichlet
//! perturbation (scale 1e-3) of the initial strategy, which is also the
//! regret-matching fallback while no positive regret has accumulated.
//! Tie-breaking during purification can be seeded separately.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::policy::TabularPolicy;
use crate::tree::{GameTree, NodeData};

const INIT_PERTURBATION: f64 = 1e-3;

/// Accumulated regret-matching state.
#[derive(Debug, Clone)]
pub struct CfrState {
    /// Cumulative counterfactual regret per action slot.
    pub regrets: Vec<f64>,
    /// Reach-weighted, iteration-weighted strategy accumulator per slot.
    pub strategy_sum: Vec<f64>,
    /// Iterations performed.
    pub iteration: u32,
    /// Perturbed initial strategy; the regret-matching fallback.
    initial: Vec<f64>,
}

impl CfrState {
    fn new(tree: &GameTree, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut initial = vec![0.0; tree.total_action_slots()];
        for iset in tree.infosets() {
            let slots = tree.infoset_slots(iset.id);
            let uniform = 1.0 / iset.n_actions() as f64;
            let mut sum = 0.0;
            for slot in slots.clone() {
                // Dirichlet(1,...,1) via normalized exponentials.
                let e: f64 = -(1.0 - rng.gen::<f64>()).ln();
                initial[slot] = uniform + INIT_PERTURBATION * e;
                sum += initial[slot];
            }
            for slot in slots {
                initial[slot] /= sum;
            }
        }
        CfrState {
            regrets: vec![0.0; tree.total_action_slots()],
            strategy_sum: vec![0.0; tree.total_action_slots()],
            iteration: 0,
            initial,
        }
    }

    /// Regret-matching strategy: positive regrets normalized, falling
    /// back to the initial strategy when none are positive. Always a
    /// valid distribution.
    pub fn matching_strategy(&self, tree: &GameTree) -> TabularPolicy {
        let mut out = vec![0.0; tree.total_action_slots()];
        for iset in tree.infosets() {
            let slots = tree.infoset_slots(iset.id);
            write_matching_row(&self.regrets, &self.initial, slots, &mut out);
        }
        TabularPolicy::from_slots(out)
    }

    /// Normalized strategy sum; uniform where nothing accumulated.
    pub fn average_strategy(&self, tree: &GameTree) -> TabularPolicy {
        let mut out = vec![0.0; tree.total_action_slots()];
        for iset in tree.infosets() {
            let slots = tree.infoset_slots(iset.id);
            let total: f64 = self.strategy_sum[slots.clone()].iter().sum();
            if total > 0.0 {
                for slot in slots {
                    out[slot] = self.strategy_sum[slot] / total;
                }
            } else {
                let uniform = 1.0 / iset.n_actions() as f64;
                for slot in slots {
                    out[slot] = uniform;
                }
            }
        }
        TabularPolicy::from_slots(out)
    }
}

fn write_matching_row(
    regrets: &[f64],
    fallback: &[f64],
    slots: std::ops::Range<usize>,
    out: &mut [f64],
) {
    let mut positive = 0.0;
    for slot in slots.clone() {
        positive += regrets[slot].max(0.0);
    }
    if positive > 0.0 {
        for slot in slots {
            out[slot] = regrets[slot].max(0.0) / positive;
        }
    } else {
        out[slots.clone()].copy_from_slice(&fallback[slots]);
    }
}

/// Result of a CFR run.
#[derive(Debug, Clone)]
pub struct CfrRun {
    pub average_policy: TabularPolicy,
    pub state: CfrState,
}

/// Run vanilla CFR for `iterations` iterations. Deterministic given
/// (tree, iterations, seed).
pub fn cfr_run(tree: &GameTree, iterations: u32, seed: u64) -> CfrRun {
    cfr_run_with_updates(tree, iterations, seed, [true, true])
}

/// CFR with per-player update switches; disabling both players turns the
/// run into a no-op whose average equals the initial strategy. Diagnostic
/// hook used by tests.
pub fn cfr_run_with_updates(
    tree: &GameTree,
    iterations: u32,
    seed: u64,
    update: [bool; 2],
) -> CfrRun {
    let n = tree.n_nodes();
    let mut state = CfrState::new(tree, seed);
    // Current strategy per slot, refreshed each iteration.
    let mut strategy = state.initial.clone();
    // Own-action reach products per player; chance reach is precomputed.
    let mut reach = vec![[1.0f64; 2]; n];
    // Node values; terminal entries never change after this fill.
    let mut value = vec![0.0f64; n];
    for (id, node) in tree.nodes().iter().enumerate() {
        if let NodeData::Terminal { reward } = node.data {
            value[id] = reward;
        }
    }

    for t in 1..=iterations {
        state.iteration = t;

        // Downward own-reach sweep over decision nodes (root children
        // start at own-reach 1 for both players).
        for child in tree.node(0).children() {
            reach[child as usize] = [1.0, 1.0];
        }
        for &id in tree.decision_nodes() {
            let node = tree.node(id);
            let NodeData::Decision { player, infoset } = node.data else { unreachable!() };
            let base = tree.action_slot(infoset, 0);
            let r = reach[id as usize];
            for (off, child) in node.children().enumerate() {
                let p = strategy[base + off];
                let mut cr = r;
                cr[usize::from(player)] *= p;
                reach[child as usize] = cr;
            }
        }

        // Upward value sweep fused with regret and average updates.
        let weight = f64::from(t);
        for &id in tree.decision_nodes().iter().rev() {
            let node = tree.node(id);
            let NodeData::Decision { player, infoset } = node.data else { unreachable!() };
            let pl = usize::from(player);
            let base = tree.action_slot(infoset, 0);
            let mut v = 0.0;
            for (off, child) in node.children().enumerate() {
                v += strategy[base + off] * value[child as usize];
            }
            value[id as usize] = v;

            if update[pl] {
                let r = reach[id as usize];
                let counterfactual = tree.chance_reach(id) * r[1 - pl];
                let own = r[pl];
                for (off, child) in node.children().enumerate() {
                    let slot = base + off;
                    state.regrets[slot] += counterfactual * (value[child as usize] - v);
                    state.strategy_sum[slot] += weight * own * strategy[slot];
                }
            }
        }

        // Refresh the current strategy from regrets for the next pass.
        for iset in tree.infosets() {
            let slots = tree.infoset_slots(iset.id);
            write_matching_row(&state.regrets, &state.initial, slots, &mut strategy);
        }
    }

    // With all updates disabled nothing accumulates; fall back to the
    // initial strategy rather than uniform.
    let average_policy = if update == [false, false] {
        TabularPolicy::from_slots(state.initial.clone())
    } else {
        state.average_strategy(tree)
    };
    CfrRun { average_policy, state }
}

/// One-hot argmax per infoset, ties broken towards the lowest action.
pub fn purify(policy: &TabularPolicy, tree: &GameTree) -> TabularPolicy {
    let mut out = TabularPolicy::from_slots(vec![0.0; tree.total_action_slots()]);
    for iset in tree.infosets() {
        let row = policy.row(tree, iset.id);
        let mut best = 0;
        for (i, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = i;
            }
        }
        out.set_one_hot(tree, iset.id, best);
    }
    out
}

/// One-hot argmax with seeded random tie-breaking among maximal actions.
pub fn purify_seeded(policy: &TabularPolicy, tree: &GameTree, seed: u64) -> TabularPolicy {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut out = TabularPolicy::from_slots(vec![0.0; tree.total_action_slots()]);
    let mut ties = Vec::new();
    for iset in tree.infosets() {
        let row = policy.row(tree, iset.id);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ties.clear();
        ties.extend(row.iter().enumerate().filter(|(_, &p)| p == max).map(|(i, _)| i));
        let pick = ties[rng.gen_range(0..ties.len())];
        out.set_one_hot(tree, iset.id, pick);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::game_value;
    use crate::games::{comm_game, simple_bidding, GameSpec};
    use crate::tree::{build_tree, BuildOptions};

    fn build(spec: &dyn GameSpec) -> GameTree {
        build_tree(spec, &BuildOptions::default()).unwrap()
    }

    #[test]
    fn one_iteration_average_is_near_uniform() {
        // Under simultaneous updates no regret exists before the first
        // sweep, so the first accumulated strategy is the initial one
        // (uniform up to the tiny seeded perturbation).
        let tree = build(&simple_bidding(4).unwrap());
        let run = cfr_run(&tree, 1, 0);
        for iset in tree.infosets() {
            let row = run.average_policy.row(&tree, iset.id);
            let uniform = 1.0 / iset.n_actions() as f64;
            for &p in row {
                assert!((p - uniform).abs() < 0.05, "row {row:?}");
            }
        }
    }

    #[test]
    fn matching_strategy_is_always_a_distribution() {
        let tree = build(&simple_bidding(4).unwrap());
        let run = cfr_run(&tree, 50, 3);
        run.state.matching_strategy(&tree).validate(&tree).unwrap();
        run.average_policy.validate(&tree).unwrap();
    }

    #[test]
    fn disabled_updates_return_initial_policy() {
        let tree = build(&simple_bidding(4).unwrap());
        let run = cfr_run_with_updates(&tree, 10, 5, [false, false]);
        let fresh = CfrState::new(&tree, 5);
        assert_eq!(run.average_policy.slots(), fresh.initial.as_slice());
    }

    #[test]
    fn runs_are_deterministic_per_seed() {
        let tree = build(&comm_game(2).unwrap());
        let a = cfr_run(&tree, 100, 9);
        let b = cfr_run(&tree, 100, 9);
        assert_eq!(a.average_policy, b.average_policy);
        let c = cfr_run(&tree, 100, 10);
        assert_ne!(a.average_policy, c.average_policy);
    }

    #[test]
    fn purify_keeps_one_hot_rows() {
        let tree = build(&simple_bidding(4).unwrap());
        let pure = TabularPolicy::random_pure(&tree, 2);
        assert_eq!(purify(&pure, &tree), pure);
    }

    #[test]
    fn purify_seeded_is_deterministic_and_one_hot() {
        let tree = build(&simple_bidding(4).unwrap());
        let uniform = TabularPolicy::uniform(&tree);
        let a = purify_seeded(&uniform, &tree, 11);
        let b = purify_seeded(&uniform, &tree, 11);
        assert_eq!(a, b);
        for iset in tree.infosets() {
            let row = a.row(&tree, iset.id);
            assert_eq!(row.iter().filter(|&&p| p == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&p| p == 0.0).count(), row.len() - 1);
        }
        // Different seeds break uniform ties differently somewhere.
        let c = purify_seeded(&uniform, &tree, 12);
        assert_ne!(a, c);
    }

    #[test]
    fn cfr_improves_over_uniform_on_comm() {
        let tree = build(&comm_game(2).unwrap());
        let run = cfr_run(&tree, 200, 1);
        let uniform = game_value(&tree, &TabularPolicy::uniform(&tree));
        let trained = game_value(&tree, &run.average_policy);
        assert!(trained > uniform + 0.05, "{trained} vs {uniform}");
    }
}
