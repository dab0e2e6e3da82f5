//! Crate-wide error type.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by simulation, prediction, fitting and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A vector or matrix did not have the dimensions the operation requires.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    /// Construction of a domain type violated one of its invariants.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A matrix operation received non-finite input.
    #[error("non-finite input to {context}")]
    NonFinite { context: &'static str },

    /// The matrix exponential (or a quantity derived from it) overflowed.
    #[error("overflow in {context}: ‖sP‖₁ = {norm:.6e}")]
    Overflow { context: &'static str, norm: f64 },

    /// A numerically singular matrix was passed to `inverse`.
    #[error("singular matrix: condition estimate {cond:.6e} exceeds 1e12")]
    SingularMatrix { cond: f64 },

    /// A fixed-step integrator produced a non-finite state.
    #[error("integration diverged at step {step} (dt = {dt:.6e})")]
    Divergence { step: usize, dt: f64 },

    /// A trajectory does not contain enough events for the requested subsample.
    #[error("trajectory too short: {required} events required, {available} available")]
    TrajectoryTooShort { required: usize, available: usize },

    /// Every reaction in the design is inactive on the given data.
    #[error("all-zero design: no reaction is ever active; inactive reactions: {labels:?}")]
    InactiveReactions { labels: Vec<String> },

    /// The data set contains no usable transitions.
    #[error("empty data: {0}")]
    EmptyData(String),

    /// The line search could not find a decreasing step.
    #[error(
        "line search failed to decrease the objective after {bisections} bisections \
         at iteration {iteration} (f = {objective:.6e})"
    )]
    LineSearchFailed {
        iteration: usize,
        bisections: usize,
        objective: f64,
    },

    /// Unknown built-in preset name.
    #[error("unknown preset '{name}'; available: {available:?}")]
    UnknownPreset { name: String, available: Vec<String> },

    /// A parse or validation failure in one of the file formats.
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code classification for the CLI: 1 = validation, 2 = numerical.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::Overflow { .. }
                | Error::SingularMatrix { .. }
                | Error::Divergence { .. }
                | Error::LineSearchFailed { .. }
        )
    }
}
