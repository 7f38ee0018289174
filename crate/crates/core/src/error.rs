use thiserror::Error;

/// Errors produced by framework construction, parsing and the numerical
/// operations.
#[derive(Debug, Error)]
pub enum Error {
    /// Structurally malformed framework: index out of range, missing or
    /// wrong-length coordinates, duplicate (point, view) incidence, etc.
    #[error("invalid framework: {0}")]
    InvalidFramework(String),

    /// The bipartite point-view graph is disconnected; the stress system is
    /// only defined for a connected graph.
    #[error("bipartite point-view graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    /// Parameters that cannot produce a valid framework (e.g. a tile with
    /// fewer than d+1 points).
    #[error("generation error: {0}")]
    Generation(String),

    /// A caller-side contract violation (non-orthogonal block, mismatched
    /// dimensions, base-point mismatch, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// JSON schema violation, with the offending location.
    #[error("parse error at {path}: {reason}")]
    Parse { path: String, reason: String },

    /// Armijo backtracking exhausted `max_backtracks` halvings; the gradient
    /// is below numerical noise. Carries the state at failure.
    #[error(
        "line search failed after {backtracks} backtracks (F = {f_value:.6e}, \
         |grad| = {grad_norm:.6e})"
    )]
    StepFailure {
        backtracks: usize,
        f_value: f64,
        grad_norm: f64,
    },

    /// An analysis whose precondition does not hold (degenerate alignment,
    /// noisy input to a noiseless-only test, too many views, ...).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidFramework(msg.into())
    }
}
