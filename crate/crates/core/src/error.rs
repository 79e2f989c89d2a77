use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("label-kind error: {0}")]
    LabelKind(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error at row {row}: {message}")]
    Schema { row: usize, message: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("trace error: {0}")]
    Trace(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
