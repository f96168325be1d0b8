//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BtqError {
    /// Malformed or out-of-contract input (bad label, non-prime q, singular matrix, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A literal could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// An enumeration would exceed its configured size bound.
    #[error("resource bound exceeded: {0}")]
    ResourceBound(String),
    /// An internal consistency check failed. Always a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl BtqError {
    /// Process exit code used by the CLI for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            BtqError::InvalidInput(_) | BtqError::Parse(_) => 2,
            BtqError::ResourceBound(_) => 3,
            BtqError::Internal(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, BtqError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(BtqError::InvalidInput(msg.into()))
}
