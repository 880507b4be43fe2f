use thiserror::Error;

/// Errors raised while materializing a game into an explicit tree.
#[derive(Debug, Error)]
pub enum BuildError {
    #[error("game tree would exceed the node cap ({nodes} nodes built, cap {cap})")]
    SizeCapExceeded { nodes: usize, cap: usize },
    #[error("perfect recall violated: infoset {infoset} groups nodes with different public histories")]
    PerfectRecallViolation { infoset: u32 },
    #[error("game parameter out of range: {0}")]
    InvalidParameter(String),
}

/// Errors from policy construction or validation.
#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("infoset {infoset}: policy row has {got} entries, expected {expected}")]
    WrongLength { infoset: u32, got: usize, expected: usize },
    #[error("infoset {infoset}: probabilities sum to {sum}, not 1 (tolerance 1e-12)")]
    NotNormalized { infoset: u32, sum: f64 },
    #[error("infoset {infoset}: negative probability {value}")]
    Negative { infoset: u32, value: f64 },
    #[error("policy covers {got} infosets, tree has {expected}")]
    WrongInfosetCount { got: usize, expected: usize },
    #[error("unknown infoset key '{0}' in serialized policy")]
    UnknownKey(String),
    #[error("malformed policy JSON: {0}")]
    Malformed(String),
}

/// Errors from density / decomposition queries.
#[derive(Debug, Error)]
pub enum DensityError {
    #[error("node {0} is not a decision node")]
    NotADecisionNode(u32),
    #[error("node {0} is terminal; subtree decomposition needs a non-terminal root")]
    TerminalSubtreeRoot(u32),
}

/// Errors from the exhaustive joint-policy oracle.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exhaustive search budget exceeded ({steps} assignment evaluations, cap {cap})")]
    BudgetExceeded { steps: u64, cap: u64 },
}
