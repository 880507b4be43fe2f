//! Globally optimal deterministic joint policy by dynamic programming
//! over public states.
//!
//! A public state is the set of tree nodes sharing one public action
//! sequence, restricted to the deals still consistent with play so far.
//! At a public state the acting player's consistent private values
//! partition the nodes into infoset groups; a deterministic policy picks
//! one action per group, and the chosen actions split the state into
//! independent child states. Maximizing over per-group assignments with
//! memoization over node sets yields the optimal collaborative value.
//! Collaborative games always admit a deterministic optimum (the value is
//! multilinear in per-infoset policies), so this equals the best joint
//! policy overall.

use std::collections::HashMap;

use crate::error::OracleError;
use crate::policy::TabularPolicy;
use crate::tree::{GameTree, InfosetId, NodeId};

/// Default budget for assignment enumerations.
pub const DEFAULT_ORACLE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone)]
pub struct ExhaustiveOutcome {
    pub value: f64,
    pub policy: TabularPolicy,
    /// Assignment evaluations performed (the budgeted work unit).
    pub assignments_evaluated: u64,
}

struct MemoEntry {
    value: f64,
    /// Chosen action offset per infoset group (groups in ascending
    /// infoset-id order); empty at terminal states.
    assignment: Vec<u16>,
}

struct Dp<'a> {
    tree: &'a GameTree,
    memo: HashMap<Vec<NodeId>, MemoEntry>,
    steps: u64,
    budget: u64,
}

impl<'a> Dp<'a> {
    fn groups(&self, set: &[NodeId]) -> Vec<(InfosetId, Vec<NodeId>)> {
        let mut groups: Vec<(InfosetId, Vec<NodeId>)> = Vec::new();
        for &n in set {
            let iset = self.tree.node(n).infoset().expect("decision node");
            match groups.iter_mut().find(|(i, _)| *i == iset) {
                Some((_, v)) => v.push(n),
                None => groups.push((iset, vec![n])),
            }
        }
        groups.sort_by_key(|(i, _)| *i);
        groups
    }

    fn solve(&mut self, set: Vec<NodeId>) -> Result<f64, OracleError> {
        if let Some(entry) = self.memo.get(&set) {
            return Ok(entry.value);
        }
        let tree = self.tree;
        if tree.node(set[0]).is_terminal() {
            debug_assert!(set.iter().all(|&n| tree.node(n).is_terminal()));
            let value: f64 = set
                .iter()
                .map(|&n| tree.chance_reach(n) * tree.node(n).reward().unwrap())
                .sum();
            self.memo.insert(set, MemoEntry { value, assignment: Vec::new() });
            return Ok(value);
        }

        let groups = self.groups(&set);
        // Identical public histories imply identical legal action lists.
        let first_actions = &tree.infoset(groups[0].0).actions;
        for (iset, _) in &groups[1..] {
            assert_eq!(
                &tree.infoset(*iset).actions,
                first_actions,
                "public state mixes action sets"
            );
        }
        let n_actions = first_actions.len();

        let mut assignment = vec![0u16; groups.len()];
        let mut best_value = f64::NEG_INFINITY;
        let mut best_assignment = assignment.clone();
        loop {
            self.steps += 1;
            if self.steps > self.budget {
                return Err(OracleError::BudgetExceeded { steps: self.steps, cap: self.budget });
            }

            // Split into child public states by chosen action offset.
            let mut child_sets: Vec<(u16, Vec<NodeId>)> = Vec::new();
            for ((_, members), &a) in groups.iter().zip(&assignment) {
                let bucket = match child_sets.iter_mut().find(|(off, _)| *off == a) {
                    Some((_, v)) => v,
                    None => {
                        child_sets.push((a, Vec::new()));
                        &mut child_sets.last_mut().unwrap().1
                    }
                };
                bucket.extend(members.iter().map(|&n| tree.node(n).child(usize::from(a))));
            }
            let mut value = 0.0;
            for (_, mut child) in child_sets {
                child.sort_unstable();
                value += self.solve(child)?;
            }
            if value > best_value {
                best_value = value;
                best_assignment.copy_from_slice(&assignment);
            }

            // Mixed-radix odometer over group assignments.
            let mut pos = 0;
            loop {
                if pos == assignment.len() {
                    self.memo.insert(
                        set,
                        MemoEntry { value: best_value, assignment: best_assignment },
                    );
                    return Ok(best_value);
                }
                assignment[pos] += 1;
                if usize::from(assignment[pos]) < n_actions {
                    break;
                }
                assignment[pos] = 0;
                pos += 1;
            }
        }
    }

    fn extract(&self, set: Vec<NodeId>, policy: &mut TabularPolicy) {
        let entry = &self.memo[&set];
        if entry.assignment.is_empty() {
            return; // terminal
        }
        let groups = self.groups(&set);
        // Merge children sharing an action offset into one public state.
        let mut child_sets: Vec<(u16, Vec<NodeId>)> = Vec::new();
        for ((iset, members), &a) in groups.iter().zip(&entry.assignment) {
            policy.set_one_hot(self.tree, *iset, usize::from(a));
            let bucket = match child_sets.iter_mut().find(|(off, _)| *off == a) {
                Some((_, v)) => v,
                None => {
                    child_sets.push((a, Vec::new()));
                    &mut child_sets.last_mut().unwrap().1
                }
            };
            bucket.extend(members.iter().map(|&n| self.tree.node(n).child(usize::from(a))));
        }
        for (_, mut child) in child_sets {
            child.sort_unstable();
            self.extract(child, policy);
        }
    }
}

/// Globally optimal deterministic joint policy and its value.
///
/// `budget` caps the number of assignment evaluations; use
/// [`DEFAULT_ORACLE_BUDGET`] unless a game needs more room.
pub fn exhaustive_optimal(
    tree: &GameTree,
    budget: u64,
) -> Result<ExhaustiveOutcome, OracleError> {
    let mut dp = Dp { tree, memo: HashMap::new(), steps: 0, budget };
    let root_set: Vec<NodeId> = tree.node(tree.root()).children().collect();
    let value = dp.solve(root_set.clone())?;

    // Unreached infosets keep an arbitrary deterministic action.
    let mut policy = TabularPolicy::from_slots(vec![0.0; tree.total_action_slots()]);
    for iset in tree.infosets() {
        policy.set_one_hot(tree, iset.id, 0);
    }
    dp.extract(root_set, &mut policy);
    debug_assert!(policy.validate(tree).is_ok());

    Ok(ExhaustiveOutcome { value, policy, assignments_evaluated: dp.steps })
}
