//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed arguments that violate an operation's contract
    /// (index out of range, mismatched lengths, malformed config, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// A structural validation check failed (e.g. a `verify` suite).
    #[error("validation failure: {0}")]
    Validation(String),

    /// A numerical procedure could not produce a result
    /// (no sign change in a bracket, iteration cap hit, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 0 success, 1 validation, 2 usage, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) => 1,
            Error::Usage(_) => 2,
            Error::Numerical(_) => 3,
            Error::Io { .. } | Error::Json(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
