//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by construction and computation routines.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Input violates a documented precondition (shape, range, degeneracy).
    #[error("domain error: {0}")]
    Domain(String),
    /// Problem size exceeds a documented capacity limit.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A numerical routine failed to converge or lost accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type CoreResult<T> = Result<T, CoreError>;

impl CoreError {
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }

    pub fn capacity(msg: impl Into<String>) -> Self {
        CoreError::Capacity(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CoreError::Numerical(msg.into())
    }
}
