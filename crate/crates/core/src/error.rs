use std::io;

/// Errors raised across the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The input lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The discretization is too coarse for the requested object.
    #[error("unresolved discretization: {0}")]
    Unresolved(String),

    /// A numerical procedure blew up or failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
