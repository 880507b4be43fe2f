//! Policy-change cost and density.
//!
//! For a policy switch from `sigma` to `sigma_prime`, each state `h`
//! carries a cost `c(h) = (pi'(h) - pi(h)) * v(h)` and each non-terminal
//! state a density
//!
//! ```text
//! rho(h) = -c(h) + sum_a c(ha)
//!        = pi'(h) * (sum_a sigma'(I(h), a) * v(ha) - v(h))
//! ```
//!
//! where `pi` and `v` are reach and value under the old policy and `pi'`
//! is reach under the new one. The density vanishes wherever the local
//! policy is unchanged, and its sum over any subtree equals the
//! reach-weighted value change at the subtree root, which makes the total
//! game-value change decomposable onto exactly the changed infosets.
//! These identities are what the search exploits; this module computes
//! them as standalone quantities so they can be verified directly.

use crate::error::DensityError;
use crate::eval::{evaluate, reach_only, EvalCache};
use crate::policy::TabularPolicy;
use crate::tree::{GameTree, InfosetId, NodeData, NodeId};

/// Per-node density quantities for one (sigma, sigma') pair.
#[derive(Debug, Clone)]
pub struct DensityField {
    /// Policy-change density; exactly 0 at nodes whose infoset row is
    /// unchanged, and 0 at terminals (which carry cost but no density).
    pub rho: Vec<f64>,
    /// Policy-change cost per node.
    pub cost: Vec<f64>,
    /// Reachability under the new policy.
    pub altered_reach: Vec<f64>,
}

/// Cost of switching policies at one node, `(pi'(h) - pi(h)) * v(h)`.
pub fn cost_at(node: NodeId, eval_old: &EvalCache, altered_reach: &[f64]) -> f64 {
    let id = node as usize;
    (altered_reach[id] - eval_old.reach[id]) * eval_old.value[id]
}

/// Density at a decision node, in the concise single-node form.
///
/// Exactly 0 when the local policy row is unchanged (checked by exact
/// vector equality, not within a tolerance).
pub fn rho_at(
    tree: &GameTree,
    node: NodeId,
    sigma: &TabularPolicy,
    sigma_prime: &TabularPolicy,
    eval_old: &EvalCache,
    altered_reach: &[f64],
) -> Result<f64, DensityError> {
    let n = tree.node(node);
    let NodeData::Decision { infoset, .. } = n.data else {
        return Err(DensityError::NotADecisionNode(node));
    };
    if sigma.row_equals(sigma_prime, tree, infoset) {
        return Ok(0.0);
    }
    let row = sigma_prime.row(tree, infoset);
    let mut mixed = 0.0;
    for (off, child) in n.children().enumerate() {
        mixed += row[off] * eval_old.value[child as usize];
    }
    Ok(altered_reach[node as usize] * (mixed - eval_old.value[node as usize]))
}

/// Compute the full density field with two sweeps.
pub fn density_field(
    tree: &GameTree,
    sigma: &TabularPolicy,
    sigma_prime: &TabularPolicy,
) -> DensityField {
    let eval_old = evaluate(tree, sigma);
    let altered_reach = reach_only(tree, sigma_prime);
    let n = tree.n_nodes();
    let mut rho = vec![0.0; n];
    let mut cost = vec![0.0; n];
    for id in 0..n as NodeId {
        cost[id as usize] = cost_at(id, &eval_old, &altered_reach);
        if tree.node(id).is_decision() {
            rho[id as usize] =
                rho_at(tree, id, sigma, sigma_prime, &eval_old, &altered_reach).unwrap();
        }
    }
    DensityField { rho, cost, altered_reach }
}

/// Game-value change computed by summing densities over the changed
/// infosets only. Matches `game_value(sigma') - game_value(sigma)` within
/// numerical noise.
pub fn delta_via_density(
    tree: &GameTree,
    sigma: &TabularPolicy,
    sigma_prime: &TabularPolicy,
) -> f64 {
    let eval_old = evaluate(tree, sigma);
    let altered_reach = reach_only(tree, sigma_prime);
    let mut delta = 0.0;
    for iset in tree.infosets() {
        if sigma.row_equals(sigma_prime, tree, iset.id) {
            continue; // density vanishes without local change
        }
        for &h in &iset.members {
            delta +=
                rho_at(tree, h, sigma, sigma_prime, &eval_old, &altered_reach).unwrap();
        }
    }
    delta
}

/// Both sides of the subtree decomposition at `subtree_root`:
/// `pi'(h0) * (v'(h0) - v(h0))` on the boundary side, and the density sum
/// over the subtree's non-terminals on the other.
#[derive(Debug, Clone, Copy)]
pub struct SubtreeDelta {
    pub boundary: f64,
    pub density_sum: f64,
}

impl SubtreeDelta {
    pub fn residual(&self) -> f64 {
        (self.boundary - self.density_sum).abs()
    }
}

/// Evaluate the subtree decomposition identity at a non-terminal node,
/// computing the two sides independently.
pub fn subtree_delta(
    tree: &GameTree,
    subtree_root: NodeId,
    sigma: &TabularPolicy,
    sigma_prime: &TabularPolicy,
) -> Result<SubtreeDelta, DensityError> {
    if tree.node(subtree_root).is_terminal() {
        return Err(DensityError::TerminalSubtreeRoot(subtree_root));
    }
    let eval_old = evaluate(tree, sigma);
    let eval_new = evaluate(tree, sigma_prime);
    let boundary = eval_new.reach[subtree_root as usize]
        * (eval_new.value[subtree_root as usize] - eval_old.value[subtree_root as usize]);

    let mut density_sum = 0.0;
    let mut stack = vec![subtree_root];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        match node.data {
            NodeData::Terminal { .. } => {}
            NodeData::Chance => stack.extend(node.children()),
            NodeData::Decision { .. } => {
                density_sum +=
                    rho_at(tree, id, sigma, sigma_prime, &eval_old, &eval_new.reach).unwrap();
                stack.extend(node.children());
            }
        }
    }
    Ok(SubtreeDelta { boundary, density_sum })
}

/// The infoset improvement and its two-term split.
///
/// `j` is the density sum over the infoset; `j1` collects the
/// per-state term weighted by `pi'(h) - lambda * pi(h)`, and `j2` the
/// macroscopic remainder `lambda * pi(I) * (sum_a sigma'(I,a) Q(I,a) - V(I))`.
/// `j1 + j2 == j` for every lambda; with an unreached infoset the
/// conditional terms are defined as 0 and `j2` contributes nothing.
#[derive(Debug, Clone, Copy)]
pub struct JSplit {
    pub j1: f64,
    pub j2: f64,
    pub j: f64,
}

impl JSplit {
    pub fn residual(&self) -> f64 {
        (self.j1 + self.j2 - self.j).abs()
    }
}

/// Split the infoset improvement into its local and macroscopic terms.
pub fn j_split(
    tree: &GameTree,
    infoset: InfosetId,
    sigma: &TabularPolicy,
    sigma_prime: &TabularPolicy,
    lambda: f64,
) -> JSplit {
    let eval_old = evaluate(tree, sigma);
    let altered_reach = reach_only(tree, sigma_prime);
    let iset = tree.infoset(infoset);
    let row_new = sigma_prime.row(tree, infoset);

    let mut j = 0.0;
    let mut j1 = 0.0;
    for &h in &iset.members {
        let node = tree.node(h);
        let mut mixed = 0.0;
        for (off, child) in node.children().enumerate() {
            mixed += row_new[off] * eval_old.value[child as usize];
        }
        let advantage = mixed - eval_old.value[h as usize];
        j += altered_reach[h as usize] * advantage;
        j1 += (altered_reach[h as usize] - lambda * eval_old.reach[h as usize]) * advantage;
    }

    let mut mixed_q = 0.0;
    for (off, slot) in tree.infoset_slots(infoset).enumerate() {
        mixed_q += row_new[off] * eval_old.cond_q[slot];
    }
    let j2 = lambda
        * eval_old.infoset_reach[infoset as usize]
        * (mixed_q - eval_old.cond_v[infoset as usize]);

    let split = JSplit { j1, j2, j };
    debug_assert!(
        split.residual() < 1e-9,
        "j-split identity violated: {split:?}"
    );
    split
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::game_value;
    use crate::games::{comm_game, simple_bidding, two_suit_mini_bridge, GameSpec};
    use crate::tree::{build_tree, BuildOptions};

    fn build(spec: &dyn GameSpec) -> GameTree {
        build_tree(spec, &BuildOptions::default()).unwrap()
    }

    /// Independent two-sweep recomputation of the cost at every node.
    #[test]
    fn cost_matches_two_sweep_oracle() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 1);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 2);
        let field = density_field(&tree, &sigma, &sigma_prime);
        let old = evaluate(&tree, &sigma);
        let new = evaluate(&tree, &sigma_prime);
        for id in 0..tree.n_nodes() {
            let expected = (new.reach[id] - old.reach[id]) * old.value[id];
            assert!((field.cost[id] - expected).abs() < 1e-12);
        }
        // Root cost is always 0: both reaches are 1.
        assert_eq!(field.cost[0], 0.0);
    }

    /// The concise density form must equal the cost-difference form.
    #[test]
    fn rho_forms_agree_per_node() {
        let tree = build(&comm_game(3).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 3);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 4);
        let field = density_field(&tree, &sigma, &sigma_prime);
        for &id in tree.decision_nodes() {
            let node = tree.node(id);
            let from_costs: f64 = -field.cost[id as usize]
                + node.children().map(|c| field.cost[c as usize]).sum::<f64>();
            assert!(
                (field.rho[id as usize] - from_costs).abs() < 1e-10,
                "node {id}: {} vs {}",
                field.rho[id as usize],
                from_costs
            );
        }
    }

    #[test]
    fn rho_vanishes_exactly_without_local_change() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 5);
        let mut sigma_prime = sigma.clone();
        // Change a single infoset; everywhere else rho must be exactly 0.
        sigma_prime.set_one_hot(&tree, 3, 1);
        let field = density_field(&tree, &sigma, &sigma_prime);
        for &id in tree.decision_nodes() {
            let iset = tree.node(id).infoset().unwrap();
            if iset != 3 {
                assert_eq!(field.rho[id as usize], 0.0);
            }
        }
    }

    #[test]
    fn rho_rejects_non_decision_nodes() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::uniform(&tree);
        let old = evaluate(&tree, &sigma);
        let altered = reach_only(&tree, &sigma);
        assert!(rho_at(&tree, 0, &sigma, &sigma, &old, &altered).is_err());
    }

    #[test]
    fn one_hot_argmax_rho_is_nonnegative() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 17);
        let old = evaluate(&tree, &sigma);
        for &h in tree.decision_nodes().iter().step_by(13) {
            let node = tree.node(h);
            let argmax = node
                .children()
                .enumerate()
                .max_by(|a, b| old.value[a.1 as usize].total_cmp(&old.value[b.1 as usize]))
                .map(|(off, _)| off)
                .unwrap();
            let mut sigma_prime = sigma.clone();
            sigma_prime.set_one_hot(&tree, node.infoset().unwrap(), argmax);
            let altered = reach_only(&tree, &sigma_prime);
            let r = rho_at(&tree, h, &sigma, &sigma_prime, &old, &altered).unwrap();
            assert!(r >= -1e-15, "node {h}: rho {r}");
        }
    }

    #[test]
    fn delta_via_density_matches_direct_difference() {
        for (name, tree) in [
            ("comm3", build(&comm_game(3).unwrap())),
            ("sb4", build(&simple_bidding(4).unwrap())),
            ("mb3", build(&two_suit_mini_bridge(3).unwrap())),
        ] {
            for seed in 0..20u64 {
                let sigma = TabularPolicy::random_mixed(&tree, seed);
                let sigma_prime = TabularPolicy::random_mixed(&tree, seed + 1000);
                let delta = delta_via_density(&tree, &sigma, &sigma_prime);
                let direct = game_value(&tree, &sigma_prime) - game_value(&tree, &sigma);
                assert!(
                    (delta - direct).abs() < 1e-9,
                    "{name} seed {seed}: {delta} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn delta_is_zero_for_identical_policies() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 9);
        assert_eq!(delta_via_density(&tree, &sigma, &sigma.clone()), 0.0);
    }

    #[test]
    fn single_infoset_change_matches_direct_difference() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 21);
        for iset in 0..tree.n_infosets() as u32 {
            let mut sigma_prime = sigma.clone();
            sigma_prime.set_one_hot(&tree, iset, 0);
            let delta = delta_via_density(&tree, &sigma, &sigma_prime);
            let direct = game_value(&tree, &sigma_prime) - game_value(&tree, &sigma);
            assert!((delta - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn full_tree_density_sum_matches_direct_difference() {
        let tree = build(&two_suit_mini_bridge(3).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 31);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 32);
        let field = density_field(&tree, &sigma, &sigma_prime);
        let total: f64 = field.rho.iter().sum();
        let direct = game_value(&tree, &sigma_prime) - game_value(&tree, &sigma);
        assert!((total - direct).abs() < 1e-9);
    }

    #[test]
    fn subtree_identity_holds_at_random_interior_nodes() {
        let tree = build(&two_suit_mini_bridge(3).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 41);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 42);
        // Root reduces to the full decomposition.
        let at_root = subtree_delta(&tree, 0, &sigma, &sigma_prime).unwrap();
        let direct = game_value(&tree, &sigma_prime) - game_value(&tree, &sigma);
        assert!((at_root.boundary - direct).abs() < 1e-12);
        assert!(at_root.residual() < 1e-9);

        let step = tree.decision_nodes().len() / 17 + 1;
        for &h in tree.decision_nodes().iter().step_by(step) {
            let d = subtree_delta(&tree, h, &sigma, &sigma_prime).unwrap();
            assert!(d.residual() < 1e-9, "node {h}: {d:?}");
        }
    }

    #[test]
    fn subtree_rejects_terminal_roots() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::uniform(&tree);
        let terminal = (0..tree.n_nodes() as NodeId)
            .find(|&id| tree.node(id).is_terminal())
            .unwrap();
        assert!(subtree_delta(&tree, terminal, &sigma, &sigma.clone()).is_err());
    }

    #[test]
    fn subtree_sum_is_zero_when_unchanged_below() {
        let tree = build(&simple_bidding(4).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 51);
        // Change only the root-most infoset; any subtree strictly below an
        // unchanged region sums to zero.
        let mut sigma_prime = sigma.clone();
        sigma_prime.set_one_hot(&tree, 0, 1);
        for &h in tree.decision_nodes().iter().skip(100).take(20) {
            if tree.node(h).infoset() != Some(0) {
                let d = subtree_delta(&tree, h, &sigma, &sigma_prime).unwrap();
                // All densities below h are zero; only reach changed.
                assert!(d.density_sum.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn j_split_identity_holds_for_various_lambda() {
        let tree = build(&comm_game(3).unwrap());
        let sigma = TabularPolicy::random_mixed(&tree, 61);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 62);
        for &lambda in &[-1.0, 0.0, 0.5, 1.0, 3.7, 10.0] {
            for iset in (0..tree.n_infosets() as u32).step_by(7) {
                let split = j_split(&tree, iset, &sigma, &sigma_prime, lambda);
                assert!(split.residual() < 1e-9, "lambda {lambda} iset {iset}: {split:?}");
                if lambda == 0.0 {
                    assert_eq!(split.j2, 0.0);
                    assert!((split.j1 - split.j).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn j_split_handles_unreached_infosets() {
        let tree = build(&simple_bidding(4).unwrap());
        // Pure policy: most infosets unreached.
        let sigma = TabularPolicy::random_pure(&tree, 7);
        let sigma_prime = TabularPolicy::random_mixed(&tree, 8);
        let old = evaluate(&tree, &sigma);
        for iset in 0..tree.n_infosets() as u32 {
            if old.infoset_reach[iset as usize] == 0.0 {
                let split = j_split(&tree, iset, &sigma, &sigma_prime, 2.5);
                assert_eq!(split.j2, 0.0);
                assert!(split.residual() < 1e-12);
            }
        }
    }
}
