use thiserror::Error;

/// Errors raised by the library. The variants map onto the CLI exit codes:
/// argument-like errors are usage errors, capacity errors have their own
/// code, and everything numerical is a check failure.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("invalid partition: {0}")]
    Partition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
