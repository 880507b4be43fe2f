//! Joint policy search.
//!
//! Starting from an evaluated policy, the search proposes chains of
//! one-hot overrides: it activates an infoset, forces one of its actions,
//! and recurses into the successor infosets of that action, accumulating
//! each activated infoset's density sum
//!
//! ```text
//! J(I) = sum_{h in I} pi'(h) * (v(h, forced) - v(h))
//! ```
//!
//! computed against the cached sweep of the *current* policy, with the
//! altered reachability `pi'` obtained by back-tracing ancestors instead
//! of re-sweeping the tree. The best positive chain is applied and the
//! process repeats; in exact mode the game value never decreases.
//!
//! `brute_force_improve` walks the same proposal space but scores every
//! chain with a full evaluation, serving as the correctness oracle and
//! speed baseline. `exhaustive_optimal` computes the globally optimal
//! deterministic joint policy by dynamic programming over public states.

mod exhaustive;

pub use exhaustive::{exhaustive_optimal, ExhaustiveOutcome, DEFAULT_ORACLE_BUDGET};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::eval::{evaluate, game_value, EvalCache};
use crate::policy::TabularPolicy;
use crate::tree::{GameTree, InfosetId, NodeId, NO_NODE};

/// How the outer loop picks the starting infoset of each proposal chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartSelection {
    /// Score every infoset as a chain start each outer iteration and
    /// apply the single best positive proposal. Deterministic and
    /// thorough; the default for small games.
    All,
    /// Cycle through infosets, applying the first positive proposal
    /// found. Much cheaper per iteration on large games.
    RoundRobin,
}

/// Search configuration.
#[derive(Debug, Clone)]
pub struct JpsConfig {
    /// Maximum chain length (number of simultaneously activated
    /// infosets). `u32::MAX` means full depth.
    pub max_depth: u32,
    /// Outer iteration cap.
    pub max_iterations: u32,
    /// Improvements at or below this threshold are rejected, preventing
    /// float-noise cycling.
    pub improvement_epsilon: f64,
    pub start_selection: StartSelection,
    /// 0 = exact sums over every state of an infoset; m > 0 replaces each
    /// sum with m draws from the infoset's states, with replacement.
    pub samples_per_infoset: u32,
    /// In sampled mode, return the iterate with the highest exact game
    /// value instead of the last one.
    pub best_over_iterations: bool,
    pub rng_seed: u64,
    /// Skip candidate infosets all of whose (sampled) states have zero
    /// altered reachability. Such candidates contribute a zero density
    /// sum themselves; pruning them narrows the proposal space to chains
    /// that stay reachable under the proposal prefix, which loses nothing
    /// single-start reachable and is dramatically faster on purified
    /// policies.
    pub prune_unreachable: bool,
    /// Test hook: when `samples_per_infoset` covers an infoset entirely,
    /// enumerate its states exactly instead of sampling, making the
    /// sampled search coincide with the exact one.
    pub full_enumeration_when_covering: bool,
}

impl Default for JpsConfig {
    fn default() -> Self {
        JpsConfig {
            max_depth: u32::MAX,
            max_iterations: 1000,
            improvement_epsilon: 1e-9,
            start_selection: StartSelection::All,
            samples_per_infoset: 0,
            best_over_iterations: false,
            rng_seed: 0,
            prune_unreachable: true,
            full_enumeration_when_covering: false,
        }
    }
}

/// An ordered chain of (infoset, forced action) overrides. Each later
/// infoset is a successor of the previous one under its forced action,
/// so at most one infoset per depth is active.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSetProposal {
    pub chain: Vec<(InfosetId, u16)>,
}

impl ActiveSetProposal {
    pub fn depth(&self) -> usize {
        self.chain.len()
    }

    /// Structural check of the successor-chain invariant.
    pub fn is_valid_succ_chain(&self, tree: &GameTree) -> bool {
        self.chain.windows(2).all(|w| {
            tree.successors(w[0].0, usize::from(w[0].1)).contains(&w[1].0)
        })
    }

    /// Materialize the proposal: the base policy with one-hot rows at the
    /// chain's infosets.
    pub fn apply(&self, tree: &GameTree, base: &TabularPolicy) -> TabularPolicy {
        let mut out = base.clone();
        for &(infoset, action) in &self.chain {
            out.set_one_hot(tree, infoset, usize::from(action));
        }
        out
    }

    fn forced_action(&self, infoset: InfosetId) -> Option<u16> {
        self.chain.iter().find(|(i, _)| *i == infoset).map(|&(_, a)| a)
    }
}

/// Reachability of `node` under the proposal's one-hot overrides,
/// obtained by climbing to the root and re-multiplying edge
/// probabilities; forced edges contribute 1 on the forced action and kill
/// the reach otherwise. With an empty proposal this reproduces the cached
/// reachability of the current policy.
pub fn altered_reach(
    tree: &GameTree,
    sigma: &TabularPolicy,
    proposal: &ActiveSetProposal,
    node: NodeId,
) -> f64 {
    climb(tree, sigma, node, |iset| proposal.forced_action(iset))
}

fn climb(
    tree: &GameTree,
    sigma: &TabularPolicy,
    node: NodeId,
    forced: impl Fn(InfosetId) -> Option<u16>,
) -> f64 {
    let mut mult = 1.0;
    let mut cur = node;
    loop {
        let parent = tree.node(cur).parent;
        if parent == NO_NODE {
            return mult;
        }
        let off = tree.action_offset_of(cur);
        match tree.node(parent).data {
            crate::tree::NodeData::Chance => {
                mult *= tree.chance_probs()[off];
            }
            crate::tree::NodeData::Decision { infoset, .. } => match forced(infoset) {
                Some(a) if usize::from(a) == off => {} // forced edge: probability 1
                Some(_) => return 0.0,
                None => mult *= sigma.row(tree, infoset)[off],
            },
            crate::tree::NodeData::Terminal { .. } => unreachable!("terminal parent"),
        }
        cur = parent;
    }
}

/// Search outcome plus the exact value trace across outer iterations
/// (`values[0]` is the initial value).
#[derive(Debug, Clone)]
pub struct JpsOutcome {
    pub policy: TabularPolicy,
    pub value: f64,
    pub iterations: u32,
    pub values: Vec<f64>,
}

enum Scoring {
    /// Incremental density sums against the cached sweep.
    Density,
    /// Full evaluation of each materialized candidate (the brute-force
    /// baseline). Carries the base value to diff against.
    FullEvaluation { base_value: f64 },
}

struct Searcher<'a> {
    tree: &'a GameTree,
    sigma: &'a TabularPolicy,
    cache: &'a EvalCache,
    cfg: &'a JpsConfig,
    scoring: Scoring,
    rng: Option<&'a mut ChaCha12Rng>,
    chain: Vec<(InfosetId, u16)>,
    cum: f64,
    best_score: f64,
    best_chain: Vec<(InfosetId, u16)>,
    // Per-depth scratch: candidate member nodes and their altered reach.
    members: Vec<Vec<NodeId>>,
    reaches: Vec<Vec<f64>>,
}

impl<'a> Searcher<'a> {
    fn new(
        tree: &'a GameTree,
        sigma: &'a TabularPolicy,
        cache: &'a EvalCache,
        cfg: &'a JpsConfig,
        scoring: Scoring,
        rng: Option<&'a mut ChaCha12Rng>,
    ) -> Self {
        Searcher {
            tree,
            sigma,
            cache,
            cfg,
            scoring,
            rng,
            chain: Vec::new(),
            cum: 0.0,
            best_score: 0.0,
            best_chain: Vec::new(),
            members: Vec::new(),
            reaches: Vec::new(),
        }
    }

    /// Best improvement reachable from `start`, and the chain achieving
    /// it. The score of the empty chain is 0; only strictly better chains
    /// are reported.
    fn search_from(&mut self, start: InfosetId) -> (f64, ActiveSetProposal) {
        self.chain.clear();
        self.cum = 0.0;
        self.best_score = 0.0;
        self.best_chain.clear();
        let score = self.recurse(&[start], 0);
        debug_assert!(score >= 0.0);
        (self.best_score, ActiveSetProposal { chain: self.best_chain.clone() })
    }

    /// The search recursion: returns the best cumulative improvement of
    /// any chain extension through `candidates`, including the empty
    /// extension (never negative).
    fn recurse(&mut self, candidates: &[InfosetId], depth: u32) -> f64 {
        if depth >= self.cfg.max_depth {
            return 0.0;
        }
        let tree = self.tree;
        let d = depth as usize;
        while self.members.len() <= d {
            self.members.push(Vec::new());
            self.reaches.push(Vec::new());
        }
        let mut best = 0.0f64;
        for &infoset in candidates {
            let mut members = std::mem::take(&mut self.members[d]);
            let mut reaches = std::mem::take(&mut self.reaches[d]);
            self.fill_candidate(infoset, &mut members, &mut reaches);
            if self.cfg.prune_unreachable && reaches.iter().all(|&r| r == 0.0) {
                self.members[d] = members;
                self.reaches[d] = reaches;
                continue;
            }
            let n_actions = self.tree.infoset(infoset).n_actions();
            for action in 0..n_actions {
                let j = match self.scoring {
                    Scoring::Density => {
                        let mut j = 0.0;
                        for (&m, &r) in members.iter().zip(&reaches) {
                            let node = self.tree.node(m);
                            j += r
                                * (self.cache.value[node.child(action) as usize]
                                    - self.cache.value[m as usize]);
                        }
                        j
                    }
                    Scoring::FullEvaluation { .. } => 0.0, // scored at consider()
                };
                self.chain.push((infoset, action as u16));
                self.cum += j;
                self.consider();
                let succ = tree.successors(infoset, action);
                let below = self.recurse(succ, depth + 1);
                self.cum -= j;
                self.chain.pop();
                best = best.max(j + below);
            }
            self.members[d] = members;
            self.reaches[d] = reaches;
        }
        best
    }

    /// Score the current chain and record it if it beats the incumbent
    /// under (score, then shorter chain, then lexicographic) ordering.
    fn consider(&mut self) {
        let score = match self.scoring {
            Scoring::Density => self.cum,
            Scoring::FullEvaluation { base_value } => {
                let candidate =
                    ActiveSetProposal { chain: self.chain.clone() }.apply(self.tree, self.sigma);
                game_value(self.tree, &candidate) - base_value
            }
        };
        let better = score > self.best_score
            || (score == self.best_score
                && !self.best_chain.is_empty()
                && chain_precedes(&self.chain, &self.best_chain));
        if better {
            self.best_score = score;
            self.best_chain.clear();
            self.best_chain.extend_from_slice(&self.chain);
        }
    }

    fn fill_candidate(
        &mut self,
        infoset: InfosetId,
        members: &mut Vec<NodeId>,
        reaches: &mut Vec<f64>,
    ) {
        members.clear();
        reaches.clear();
        let all = &self.tree.infoset(infoset).members;
        let m = self.cfg.samples_per_infoset as usize;
        if m == 0 || (self.cfg.full_enumeration_when_covering && m >= all.len()) {
            members.extend_from_slice(all);
        } else {
            let rng = self.rng.as_mut().expect("sampled search needs an RNG");
            for _ in 0..m {
                members.push(all[rng.gen_range(0..all.len())]);
            }
        }
        if self.chain.is_empty() {
            reaches.extend(members.iter().map(|&n| self.cache.reach[n as usize]));
        } else {
            let chain = &self.chain;
            for &n in members.iter() {
                reaches.push(climb(self.tree, self.sigma, n, |iset| {
                    chain.iter().find(|(i, _)| *i == iset).map(|&(_, a)| a)
                }));
            }
        }
    }
}

/// Tie-break ordering: shorter chain first, then lowest infoset id, then
/// lowest action index, position by position.
fn chain_precedes(a: &[(InfosetId, u16)], b: &[(InfosetId, u16)]) -> bool {
    (a.len(), a) < (b.len(), b)
}

/// Best chain from a single start infoset under the current policy. The
/// returned score is the predicted game-value improvement (0 with an
/// empty chain when nothing positive exists).
pub fn best_chain_from(
    tree: &GameTree,
    sigma: &TabularPolicy,
    cache: &EvalCache,
    cfg: &JpsConfig,
    start: InfosetId,
) -> (f64, ActiveSetProposal) {
    let mut searcher = Searcher::new(tree, sigma, cache, cfg, Scoring::Density, None);
    searcher.search_from(start)
}

fn better_proposal(
    incumbent: &Option<(f64, ActiveSetProposal)>,
    score: f64,
    proposal: &ActiveSetProposal,
) -> bool {
    match incumbent {
        None => true,
        Some((s, p)) => {
            score > *s || (score == *s && chain_precedes(&proposal.chain, &p.chain))
        }
    }
}

struct OuterLoop<'a> {
    tree: &'a GameTree,
    cfg: &'a JpsConfig,
    starts: Vec<InfosetId>,
    cursor: usize,
}

impl<'a> OuterLoop<'a> {
    fn new(tree: &'a GameTree, cfg: &'a JpsConfig) -> Self {
        let starts = (0..tree.n_infosets() as InfosetId).collect();
        OuterLoop { tree, cfg, starts, cursor: 0 }
    }

    /// One outer iteration's proposal under the configured start
    /// selection, or `None` when no start yields a positive improvement.
    fn propose(
        &mut self,
        sigma: &TabularPolicy,
        cache: &EvalCache,
        scoring_base: Option<f64>,
        rng: Option<&mut ChaCha12Rng>,
    ) -> Option<(f64, ActiveSetProposal)> {
        let scoring = match scoring_base {
            None => Scoring::Density,
            Some(base_value) => Scoring::FullEvaluation { base_value },
        };
        let mut searcher = Searcher::new(self.tree, sigma, cache, self.cfg, scoring, rng);
        match self.cfg.start_selection {
            StartSelection::All => {
                let mut best: Option<(f64, ActiveSetProposal)> = None;
                for &start in &self.starts {
                    let (score, proposal) = searcher.search_from(start);
                    if score > self.cfg.improvement_epsilon
                        && better_proposal(&best, score, &proposal)
                    {
                        best = Some((score, proposal));
                    }
                }
                best
            }
            StartSelection::RoundRobin => {
                for k in 0..self.starts.len() {
                    let idx = (self.cursor + k) % self.starts.len();
                    let (score, proposal) = searcher.search_from(self.starts[idx]);
                    if score > self.cfg.improvement_epsilon {
                        self.cursor = (idx + 1) % self.starts.len();
                        return Some((score, proposal));
                    }
                }
                None
            }
        }
    }
}

/// Exact-mode joint policy search: repeatedly applies the best positive
/// proposal until no start infoset yields an improvement above the
/// epsilon, or the iteration cap is reached. The game value never
/// decreases across iterations (checked on every acceptance).
pub fn jps_main(tree: &GameTree, sigma: &TabularPolicy, cfg: &JpsConfig) -> JpsOutcome {
    assert_eq!(cfg.samples_per_infoset, 0, "jps_main runs in exact mode; use sampled_jps");
    run_exact(tree, sigma, cfg, false)
}

/// Brute-force improver over the same proposal space and tie-break rule
/// as [`jps_main`], with every candidate scored by a full evaluation of
/// the materialized policy.
pub fn brute_force_improve(
    tree: &GameTree,
    sigma: &TabularPolicy,
    cfg: &JpsConfig,
) -> JpsOutcome {
    assert_eq!(cfg.samples_per_infoset, 0, "brute force runs in exact mode");
    run_exact(tree, sigma, cfg, true)
}

fn run_exact(tree: &GameTree, sigma: &TabularPolicy, cfg: &JpsConfig, brute: bool) -> JpsOutcome {
    let mut sigma = sigma.clone();
    let mut value = game_value(tree, &sigma);
    let mut values = vec![value];
    let mut outer = OuterLoop::new(tree, cfg);
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        let cache = evaluate(tree, &sigma);
        let base = if brute { Some(value) } else { None };
        let Some((score, proposal)) = outer.propose(&sigma, &cache, base, None) else {
            break; // fixed point: no start improves
        };
        iterations += 1;
        debug_assert!(proposal.is_valid_succ_chain(tree));
        let improved = proposal.apply(tree, &sigma);
        let new_value = game_value(tree, &improved);
        assert!(
            new_value >= value - 1e-12,
            "game value decreased: {value} -> {new_value}"
        );
        assert!(
            (new_value - value - score).abs() <= 1e-9,
            "accepted score {score} disagrees with exact improvement {}",
            new_value - value
        );
        sigma = improved;
        value = new_value;
        values.push(value);
    }

    JpsOutcome { policy: sigma, value, iterations, values }
}

/// Sample-based joint policy search: the same chain search with each
/// infoset sum replaced by `samples_per_infoset` draws with replacement.
/// Monotonicity is not guaranteed; the run always executes
/// `max_iterations` iterations and reports exact values. With
/// `best_over_iterations` the best exact iterate is returned.
pub fn sampled_jps(tree: &GameTree, sigma: &TabularPolicy, cfg: &JpsConfig) -> JpsOutcome {
    assert!(cfg.samples_per_infoset >= 1, "sampled_jps needs samples_per_infoset >= 1");
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.rng_seed);
    let mut sigma = sigma.clone();
    let mut value = game_value(tree, &sigma);
    let mut values = vec![value];
    let mut best = (value, sigma.clone());
    let mut outer = OuterLoop::new(tree, cfg);

    for _ in 0..cfg.max_iterations {
        let cache = evaluate(tree, &sigma);
        if let Some((_, proposal)) = outer.propose(&sigma, &cache, None, Some(&mut rng)) {
            debug_assert!(proposal.is_valid_succ_chain(tree));
            sigma = proposal.apply(tree, &sigma);
            value = game_value(tree, &sigma);
            if value > best.0 {
                best = (value, sigma.clone());
            }
        }
        values.push(value);
    }

    let iterations = cfg.max_iterations;
    if cfg.best_over_iterations {
        JpsOutcome { policy: best.1, value: best.0, iterations, values }
    } else {
        JpsOutcome { policy: sigma, value, iterations, values }
    }
}
