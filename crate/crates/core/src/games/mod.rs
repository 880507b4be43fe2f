//! Game definitions behind one pluggable interface.
//!
//! A [`GameSpec`] describes a two-player collaborative game in which all
//! private information is dealt once up front (a single chance move) and
//! every subsequent action is public. The tree builder materializes a spec
//! into an explicit [`crate::tree::GameTree`].
//!
//! Third-party games plug in by implementing [`GameSpec`]; the shipped
//! games are [`comm::CommGame`], [`simple_bidding::SimpleBidding`] and
//! [`mini_bridge::TwoSuitMiniBridge`].

mod comm;
mod mini_bridge;
mod simple_bidding;

pub use comm::{comm_game, CommGame};
pub use mini_bridge::{two_suit_mini_bridge, TwoSuitMiniBridge};
pub use simple_bidding::{simple_bidding, SimpleBidding};

/// Player index: 0 is the first mover.
pub type PlayerId = u8;

/// One private deal: one entry per player (entries for players without
/// private state are zero and never read).
pub type Deal = Vec<u16>;

/// Global action code within a game. Codes are game-defined; the only
/// requirement is that a code means the same thing wherever it is legal.
pub type ActionCode = u16;

/// A two-player collaborative game with one up-front chance move and
/// public actions thereafter.
///
/// `history` is always the public action sequence (codes), never including
/// the deal. Legal actions may depend only on the acting player's
/// observation; for the shipped games they depend on the history alone.
pub trait GameSpec {
    /// Short machine-friendly name, e.g. `comm-L3`.
    fn name(&self) -> String;

    /// Number of players (2 for all shipped games).
    fn players(&self) -> usize {
        2
    }

    /// All private deals with probabilities summing to 1.
    fn deals(&self) -> Vec<(Deal, f64)>;

    /// Acting player at a non-terminal history.
    fn actor(&self, history: &[ActionCode]) -> PlayerId;

    /// Ordered legal action codes at a non-terminal history.
    fn legal_actions(&self, history: &[ActionCode]) -> Vec<ActionCode>;

    fn is_terminal(&self, history: &[ActionCode]) -> bool;

    /// Shared reward at a terminal history under the given deal.
    fn reward(&self, deal: &Deal, history: &[ActionCode]) -> f64;

    /// Everything the acting player can see, rendered as a stable string.
    /// Two states get the same key exactly when they are indistinguishable
    /// to `player`. Keys double as policy-dump identifiers.
    fn infoset_key(&self, player: PlayerId, deal: &Deal, history: &[ActionCode]) -> String;

    /// Human-readable label for an action code.
    fn action_label(&self, code: ActionCode) -> String;
}

pub(crate) fn history_string(spec: &dyn GameSpec, history: &[ActionCode]) -> String {
    history
        .iter()
        .map(|&c| spec.action_label(c))
        .collect::<Vec<_>>()
        .join("-")
}
