//! Solvers for two-player collaborative imperfect-information games.
//!
//! The crate materializes compact bidding/communication games into
//! explicit extensive-form trees ([`tree`]), evaluates tabular policies
//! exactly ([`eval`]), measures the effect of local policy changes via
//! policy-change densities ([`density`]), and improves policies with
//! joint policy search ([`jps`]) on top of a vanilla CFR baseline
//! ([`cfr`]).

pub mod cfr;
pub mod density;
pub mod error;
pub mod eval;
pub mod games;
pub mod jps;
pub mod policy;
pub mod tree;

pub use error::{BuildError, DensityError, OracleError, PolicyError};
pub use eval::{evaluate, game_value, reach_only, EvalCache};
pub use games::{comm_game, simple_bidding, two_suit_mini_bridge, GameSpec, PlayerId};
pub use policy::TabularPolicy;
pub use tree::{build_tree, BuildOptions, CountReport, GameTree, Infoset, InfosetId, NodeId};
