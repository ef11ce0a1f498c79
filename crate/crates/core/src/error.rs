//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the optimizer and its numerical kernels.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input violated a precondition (non-finite value, bad dimension, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A Cholesky factorization failed even at the largest jitter attempted.
    #[error("cholesky factorization failed at jitter {jitter:.1e}")]
    CholeskyFailed {
        /// Largest diagonal jitter that was tried before giving up.
        jitter: f64,
    },

    /// An API contract was broken (e.g. `tell` without a matching `ask`).
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// Every trust region has terminated; no candidates can be proposed.
    #[error("no active trust region")]
    NoActiveRegion,

    /// Objective evaluation failed at the given point.
    #[error("objective evaluation failed at {point:?}: {message}")]
    ObjectiveFailed {
        /// Point (unit-cube coordinates) at which the evaluation failed.
        point: Vec<f64>,
        /// Underlying failure description.
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }
}
