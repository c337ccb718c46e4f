//! Error type shared across the toolkit.

use crate::conic::SolveStatus;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input: bad dimensions, out-of-range points, unsupported parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The data vector is incompatible with the model set: the consistent set is
    /// empty (no model element could have produced the observations).
    #[error("infeasible data: {0}")]
    InfeasibleData(String),

    /// The conic solver stopped without a usable certificate.
    #[error("solver failure ({status:?}): {detail}")]
    SolverFailure { status: SolveStatus, detail: String },

    /// A quantity that is nonnegative by theory came out strongly negative, or two
    /// redundant computation paths disagree beyond tolerance — a bug, not noise.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::InfeasibleData(msg.into())
    }

    pub fn inconsistent(msg: impl Into<String>) -> Self {
        Error::InternalInconsistency(msg.into())
    }
}
