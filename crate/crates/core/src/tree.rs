//! Materialized game trees.
//!
//! A [`GameTree`] is an immutable arena of nodes produced from a
//! [`GameSpec`](crate::games::GameSpec) by breadth-first expansion, so node
//! ids are deterministic and a node's children occupy a contiguous id
//! range. The single chance node sits at the root and enumerates all
//! private deals; every other node is a decision or terminal node.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use crate::error::BuildError;
use crate::games::{ActionCode, GameSpec, PlayerId};

pub type NodeId = u32;
pub type InfosetId = u32;

pub const NO_NODE: NodeId = u32::MAX;

/// Node payload.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeData {
    /// The dealing node at the root. Outcome probabilities live in
    /// [`GameTree::chance_probs`].
    Chance,
    Decision { player: PlayerId, infoset: InfosetId },
    Terminal { reward: f64 },
}

/// One node of the arena. Children are contiguous: the child reached by
/// the infoset's `i`-th legal action has id `child_start + i`.
#[derive(Debug, Clone)]
pub struct GameNode {
    pub parent: NodeId,
    pub child_start: NodeId,
    pub child_count: u16,
    pub data: NodeData,
}

impl GameNode {
    pub fn children(&self) -> std::ops::Range<NodeId> {
        self.child_start..self.child_start + NodeId::from(self.child_count)
    }

    pub fn child(&self, action: usize) -> NodeId {
        debug_assert!(action < usize::from(self.child_count));
        self.child_start + action as NodeId
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.data, NodeData::Terminal { .. })
    }

    pub fn is_decision(&self) -> bool {
        matches!(self.data, NodeData::Decision { .. })
    }

    pub fn infoset(&self) -> Option<InfosetId> {
        match self.data {
            NodeData::Decision { infoset, .. } => Some(infoset),
            _ => None,
        }
    }

    pub fn reward(&self) -> Option<f64> {
        match self.data {
            NodeData::Terminal { reward } => Some(reward),
            _ => None,
        }
    }
}

/// A set of decision nodes indistinguishable to the acting player.
#[derive(Debug, Clone)]
pub struct Infoset {
    pub id: InfosetId,
    pub player: PlayerId,
    /// Stable observation key (doubles as the policy-dump identifier).
    pub key: String,
    /// Member node ids in ascending (breadth-first) order.
    pub members: Vec<NodeId>,
    /// Ordered legal action codes shared by every member.
    pub actions: Vec<ActionCode>,
}

impl Infoset {
    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }
}

/// How [`GameTree::count_report`] tallies states and infosets. These
/// conventions are calibration metadata only; solvers never consult them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountConvention {
    /// States: every node. Infosets: decision infosets, plus terminals
    /// grouped by public action sequence, plus one for the chance node.
    AllNodesTerminalsGrouped,
    /// States: the chance root plus decision nodes reached after at least
    /// one public action. Infosets: likewise, plus one for the chance
    /// node. Opening decisions merge into the root for counting purposes.
    RootPlusPostOpeningDecisions,
    /// States: every node. Infosets: decision infosets plus one for the
    /// chance node.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountReport {
    pub states: usize,
    pub infosets: usize,
}

/// Build-time limits.
#[derive(Debug, Clone)]
pub struct BuildOptions {
    /// Maximum number of nodes to materialize.
    pub node_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { node_cap: 10_000_000 }
    }
}

#[derive(Debug)]
pub struct GameTree {
    pub name: String,
    pub players: usize,
    nodes: Vec<GameNode>,
    infosets: Vec<Infoset>,
    /// Per-infoset ordered action labels, aligned with `Infoset::actions`.
    action_labels: Vec<Vec<String>>,
    /// Outcome probabilities of the root chance node, by child offset.
    chance_probs: Vec<f64>,
    /// Per node, the product of chance probabilities on its path.
    chance_reach: Vec<f64>,
    /// Flat action-slot layout: slot of (infoset i, action a) is
    /// `action_offsets[i] + a`; `action_offsets[n_infosets]` is the total.
    action_offsets: Vec<u32>,
    /// Decision node ids in ascending order.
    decision_nodes: Vec<NodeId>,
    /// Successor infosets per action slot, each sorted ascending.
    succ: Vec<Vec<InfosetId>>,
    /// Number of terminal nodes grouped by public action sequence.
    terminal_public_groups: usize,
    counting: CountConvention,
    key_index: HashMap<String, InfosetId>,
}

impl GameTree {
    pub fn root(&self) -> NodeId {
        0
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_infosets(&self) -> usize {
        self.infosets.len()
    }

    pub fn node(&self, id: NodeId) -> &GameNode {
        &self.nodes[id as usize]
    }

    pub fn nodes(&self) -> &[GameNode] {
        &self.nodes
    }

    pub fn infoset(&self, id: InfosetId) -> &Infoset {
        &self.infosets[id as usize]
    }

    pub fn infosets(&self) -> &[Infoset] {
        &self.infosets
    }

    pub fn infoset_by_key(&self, key: &str) -> Option<InfosetId> {
        self.key_index.get(key).copied()
    }

    pub fn action_labels(&self, infoset: InfosetId) -> &[String] {
        &self.action_labels[infoset as usize]
    }

    pub fn chance_probs(&self) -> &[f64] {
        &self.chance_probs
    }

    pub fn chance_reach(&self, id: NodeId) -> f64 {
        self.chance_reach[id as usize]
    }

    pub fn decision_nodes(&self) -> &[NodeId] {
        &self.decision_nodes
    }

    /// Flat slot index of (infoset, action offset).
    pub fn action_slot(&self, infoset: InfosetId, action: usize) -> usize {
        self.action_offsets[infoset as usize] as usize + action
    }

    pub fn infoset_slots(&self, infoset: InfosetId) -> std::ops::Range<usize> {
        self.action_offsets[infoset as usize] as usize
            ..self.action_offsets[infoset as usize + 1] as usize
    }

    pub fn total_action_slots(&self) -> usize {
        *self.action_offsets.last().unwrap() as usize
    }

    /// Successor infosets of (infoset, action): the infosets of decision
    /// nodes reached immediately after taking the action from a member.
    pub fn successors(&self, infoset: InfosetId, action: usize) -> &[InfosetId] {
        &self.succ[self.action_slot(infoset, action)]
    }

    /// Offset of `child` within its parent's child range, i.e. the index
    /// of the action that leads to it.
    pub fn action_offset_of(&self, child: NodeId) -> usize {
        let parent = self.nodes[child as usize].parent;
        debug_assert_ne!(parent, NO_NODE);
        (child - self.nodes[parent as usize].child_start) as usize
    }

    pub fn counting(&self) -> CountConvention {
        self.counting
    }

    /// Calibration counts under the game's documented convention.
    pub fn count_report(&self) -> CountReport {
        match self.counting {
            CountConvention::AllNodesTerminalsGrouped => CountReport {
                states: self.nodes.len(),
                infosets: self.infosets.len() + self.terminal_public_groups + 1,
            },
            CountConvention::RootPlusPostOpeningDecisions => {
                let post_opening = |first_member: NodeId| {
                    self.nodes[first_member as usize].parent != self.root()
                };
                let states = 1 + self
                    .decision_nodes
                    .iter()
                    .filter(|&&n| post_opening(n))
                    .count();
                let infosets = 1 + self
                    .infosets
                    .iter()
                    .filter(|i| post_opening(i.members[0]))
                    .count();
                CountReport { states, infosets }
            }
            CountConvention::Raw => CountReport {
                states: self.nodes.len(),
                infosets: self.infosets.len() + 1,
            },
        }
    }

    /// Graphviz rendering for debugging small trees.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph game {\n  rankdir=TB;\n");
        for (id, node) in self.nodes.iter().enumerate() {
            let label = match node.data {
                NodeData::Chance => "chance".to_string(),
                NodeData::Decision { player, infoset } => {
                    format!("P{} I{}", player + 1, infoset)
                }
                NodeData::Terminal { reward } => format!("r={reward}"),
            };
            let shape = match node.data {
                NodeData::Chance => "diamond",
                NodeData::Decision { .. } => "ellipse",
                NodeData::Terminal { .. } => "box",
            };
            let _ = writeln!(out, "  n{id} [label=\"{label}\", shape={shape}];");
        }
        for (id, node) in self.nodes.iter().enumerate() {
            for (off, child) in node.children().enumerate() {
                let edge = match node.data {
                    NodeData::Chance => format!("{:.4}", self.chance_probs[off]),
                    NodeData::Decision { infoset, .. } => {
                        self.action_labels[infoset as usize][off].clone()
                    }
                    NodeData::Terminal { .. } => String::new(),
                };
                let _ = writeln!(out, "  n{id} -> n{child} [label=\"{edge}\"];");
            }
        }
        out.push_str("}\n");
        out
    }
}

struct Builder<'s> {
    spec: &'s dyn GameSpec,
    cap: usize,
    nodes: Vec<GameNode>,
    chance_reach: Vec<f64>,
    infosets: Vec<Infoset>,
    key_index: HashMap<String, InfosetId>,
    /// Public history of each infoset's first member, for the recall check.
    infoset_history: Vec<Vec<ActionCode>>,
    terminal_groups: HashSet<(u64, u64)>,
    queue: VecDeque<(NodeId, usize, Vec<ActionCode>)>,
    deals: Vec<(Vec<u16>, f64)>,
}

impl<'s> Builder<'s> {
    fn push_node(
        &mut self,
        parent: NodeId,
        deal_idx: usize,
        history: &[ActionCode],
    ) -> Result<NodeId, BuildError> {
        if self.nodes.len() >= self.cap {
            return Err(BuildError::SizeCapExceeded { nodes: self.nodes.len() + 1, cap: self.cap });
        }
        let id = self.nodes.len() as NodeId;
        let reach = self.chance_reach[parent as usize]
            * if parent == 0 { self.deals[deal_idx].1 } else { 1.0 };
        self.chance_reach.push(reach);

        let data = if self.spec.is_terminal(history) {
            self.terminal_groups.insert(history_fingerprint(history));
            let reward = self.spec.reward(&self.deals[deal_idx].0, history);
            NodeData::Terminal { reward }
        } else {
            let player = self.spec.actor(history);
            let key = self.spec.infoset_key(player, &self.deals[deal_idx].0, history);
            let infoset = self.intern_infoset(player, key, history)?;
            self.infosets[infoset as usize].members.push(id);
            self.queue.push_back((id, deal_idx, history.to_vec()));
            NodeData::Decision { player, infoset }
        };
        self.nodes.push(GameNode { parent, child_start: 0, child_count: 0, data });
        Ok(id)
    }

    fn intern_infoset(
        &mut self,
        player: PlayerId,
        key: String,
        history: &[ActionCode],
    ) -> Result<InfosetId, BuildError> {
        if let Some(&id) = self.key_index.get(&key) {
            let iset = &self.infosets[id as usize];
            if self.infoset_history[id as usize] != history {
                return Err(BuildError::PerfectRecallViolation { infoset: id });
            }
            debug_assert_eq!(iset.player, player);
            return Ok(id);
        }
        let id = self.infosets.len() as InfosetId;
        let actions = self.spec.legal_actions(history);
        assert!(!actions.is_empty(), "decision node with no legal actions");
        self.infosets.push(Infoset { id, player, key: String::new(), members: Vec::new(), actions });
        self.infosets[id as usize].key = key.clone();
        self.key_index.insert(key, id);
        self.infoset_history.push(history.to_vec());
        Ok(id)
    }
}

fn history_fingerprint(history: &[ActionCode]) -> (u64, u64) {
    let mut h1 = DefaultHasher::new();
    history.hash(&mut h1);
    let mut h2 = DefaultHasher::new();
    0xa5a5_5a5a_u64.hash(&mut h2);
    history.hash(&mut h2);
    (h1.finish(), h2.finish())
}

/// Materialize a game into an explicit tree.
///
/// Nodes are numbered breadth-first from the root, so runs are
/// reproducible and a node's children are contiguous.
pub fn build_tree(spec: &dyn GameSpec, opts: &BuildOptions) -> Result<GameTree, BuildError> {
    let deals = spec.deals();
    let total: f64 = deals.iter().map(|(_, p)| p).sum();
    if (total - 1.0).abs() > 1e-12 || deals.iter().any(|(_, p)| *p < 0.0) {
        return Err(BuildError::InvalidParameter(format!(
            "deal probabilities must be nonnegative and sum to 1 (sum = {total})"
        )));
    }

    let mut b = Builder {
        spec,
        cap: opts.node_cap,
        nodes: vec![GameNode { parent: NO_NODE, child_start: 0, child_count: 0, data: NodeData::Chance }],
        chance_reach: vec![1.0],
        infosets: Vec::new(),
        key_index: HashMap::new(),
        infoset_history: Vec::new(),
        terminal_groups: HashSet::new(),
        queue: VecDeque::new(),
        deals,
    };

    // Root expansion: one child per deal, empty public history.
    let child_start = b.nodes.len() as NodeId;
    for deal_idx in 0..b.deals.len() {
        b.push_node(0, deal_idx, &[])?;
    }
    b.nodes[0].child_start = child_start;
    b.nodes[0].child_count = u16::try_from(b.deals.len()).expect("too many deals");

    // Interior expansion.
    while let Some((id, deal_idx, history)) = b.queue.pop_front() {
        let infoset = b.nodes[id as usize].infoset().expect("queued node is a decision");
        let actions = b.infosets[infoset as usize].actions.clone();
        {
            // Legal actions must be a function of the infoset alone.
            let fresh = spec.legal_actions(&history);
            assert_eq!(fresh, actions, "legal actions differ within infoset {infoset}");
        }
        let child_start = b.nodes.len() as NodeId;
        let mut child_history = history.clone();
        for &code in &actions {
            child_history.push(code);
            b.push_node(id, deal_idx, &child_history)?;
            child_history.pop();
        }
        b.nodes[id as usize].child_start = child_start;
        b.nodes[id as usize].child_count =
            u16::try_from(actions.len()).expect("action list too long");
    }

    // Layout and derived indexes.
    let mut action_offsets = Vec::with_capacity(b.infosets.len() + 1);
    let mut acc = 0u32;
    for iset in &b.infosets {
        action_offsets.push(acc);
        acc += iset.actions.len() as u32;
    }
    action_offsets.push(acc);

    let action_labels = b
        .infosets
        .iter()
        .map(|i| i.actions.iter().map(|&c| spec.action_label(c)).collect())
        .collect();

    let decision_nodes: Vec<NodeId> = b
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.is_decision())
        .map(|(id, _)| id as NodeId)
        .collect();

    let mut succ: Vec<Vec<InfosetId>> = vec![Vec::new(); acc as usize];
    for &id in &decision_nodes {
        let node = &b.nodes[id as usize];
        let infoset = node.infoset().unwrap();
        for (off, child) in node.children().enumerate() {
            if let Some(child_iset) = b.nodes[child as usize].infoset() {
                succ[action_offsets[infoset as usize] as usize + off].push(child_iset);
            }
        }
    }
    for s in &mut succ {
        s.sort_unstable();
        s.dedup();
    }

    let chance_probs = b.deals.iter().map(|(_, p)| *p).collect();
    let key_index = b.key_index;
    Ok(GameTree {
        name: spec.name(),
        players: spec.players(),
        nodes: b.nodes,
        infosets: b.infosets,
        action_labels,
        chance_probs,
        chance_reach: b.chance_reach,
        action_offsets,
        decision_nodes,
        succ,
        terminal_public_groups: b.terminal_groups.len(),
        counting: counting_for(&spec.name()),
        key_index,
    })
}

fn counting_for(name: &str) -> CountConvention {
    if name.starts_with("comm") {
        CountConvention::AllNodesTerminalsGrouped
    } else if name.starts_with("simple-bidding") || name.starts_with("mini-bridge") {
        CountConvention::RootPlusPostOpeningDecisions
    } else {
        CountConvention::Raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{comm_game, simple_bidding, two_suit_mini_bridge};

    fn build(spec: &dyn GameSpec) -> GameTree {
        build_tree(spec, &BuildOptions::default()).unwrap()
    }

    #[test]
    fn comm_l3_counts_match_reference() {
        let tree = build(&comm_game(3).unwrap());
        assert_eq!(tree.n_nodes(), 633);
        let report = tree.count_report();
        assert_eq!(report.states, 633);
        assert_eq!(report.infosets, 129);
    }

    #[test]
    fn comm_l5_state_count_matches_closed_form() {
        // chance root + sender decisions + guesser decisions + terminals:
        // 1 + sum_{i=1..5} 32*2^(i-1) + 32*32 + 32*32*32
        let closed_form = 1 + (1..=5).map(|i| 32 * (1 << (i - 1))).sum::<usize>() + 1024 + 32768;
        assert_eq!(closed_form, 34785);
        let tree = build(&comm_game(5).unwrap());
        assert_eq!(tree.n_nodes(), closed_form);
        assert_eq!(tree.count_report(), CountReport { states: 34785, infosets: 2049 });
    }

    #[test]
    fn simple_bidding_counts_match_reference() {
        for (n, states, infosets) in [(4u16, 241, 61), (8, 1985, 249), (16, 16129, 1009)] {
            let tree = build(&simple_bidding(n).unwrap());
            let report = tree.count_report();
            assert_eq!(report.states, states, "N={n} states");
            assert_eq!(report.infosets, infosets, "N={n} infosets");
        }
    }

    #[test]
    fn tree_structure_invariants() {
        let tree = build(&two_suit_mini_bridge(3).unwrap());
        // Exactly one root; every non-root node has exactly one parent.
        let mut seen = vec![0u32; tree.n_nodes()];
        for (id, node) in tree.nodes().iter().enumerate() {
            for c in node.children() {
                seen[c as usize] += 1;
                assert_eq!(tree.node(c).parent, id as NodeId);
            }
        }
        assert_eq!(seen[0], 0);
        assert!(seen[1..].iter().all(|&c| c == 1));

        // Infoset members are decision nodes owned by the infoset's player;
        // child counts match the legal action list.
        for iset in tree.infosets() {
            assert!(!iset.members.is_empty());
            for &m in &iset.members {
                let node = tree.node(m);
                match node.data {
                    NodeData::Decision { player, infoset } => {
                        assert_eq!(player, iset.player);
                        assert_eq!(infoset, iset.id);
                    }
                    _ => panic!("infoset member is not a decision node"),
                }
                assert_eq!(usize::from(node.child_count), iset.n_actions());
            }
        }
    }

    #[test]
    fn chance_probs_sum_to_one() {
        let tree = build(&simple_bidding(4).unwrap());
        let sum: f64 = tree.chance_probs().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(tree.chance_probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn node_cap_is_enforced() {
        let err = build_tree(&comm_game(5).unwrap(), &BuildOptions { node_cap: 1000 });
        assert!(matches!(err, Err(BuildError::SizeCapExceeded { .. })));
    }

    #[test]
    fn dot_export_mentions_every_node() {
        let tree = build(&comm_game(1).unwrap());
        let dot = tree.to_dot();
        assert!(dot.contains("digraph"));
        for id in 0..tree.n_nodes() {
            assert!(dot.contains(&format!("n{id} ")));
        }
    }
}
