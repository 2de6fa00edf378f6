use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter outside its domain: {0}")]
    ParameterDomain(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{failed} of {total} replications failed (first error: {first})")]
    ReplicationFailures {
        failed: usize,
        total: usize,
        first: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
