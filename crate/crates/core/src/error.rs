use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field does not live on this grid")]
    GridMismatch,

    #[error("kernel singularity: {0}")]
    Singular(String),

    #[error("singular linear system at row {0}")]
    SingularSystem(usize),

    #[error("trivial field: {0}")]
    TrivialField(&'static str),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
