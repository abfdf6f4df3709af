use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid distribution, policy or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of a map (for example `g` outside `(0, E[P])`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A policy or environment broke the interaction protocol.
    #[error("protocol violation: {0}")]
    Protocol(String),

    /// Numerical analysis could not produce a certified answer.
    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
