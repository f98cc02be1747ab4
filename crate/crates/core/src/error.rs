use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("construction failed after {attempts} attempts: {property}")]
    ConstructionFailure { property: String, attempts: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("size cap exceeded at level {level}: {detail}")]
    Size { level: usize, detail: String },

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
