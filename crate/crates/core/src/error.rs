//! Error type shared across the crate.

use std::io;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// An append arrived out of order (node/edge index mismatch).
    #[error("sequencing error: {0}")]
    Sequencing(String),

    /// An operation ran before a required earlier step (e.g. unscored shortcut).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An agent, embedder, or remote service failed. Carries the raw response
    /// or failure description and the HTTP status when one exists.
    #[error("backend error{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Backend {
        message: String,
        status: Option<u16>,
    },

    /// A scripted fixture table has no entry for the requested key.
    #[error("fixture error: {0}")]
    Fixture(String),

    /// A persisted file failed to parse.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// The run, backend, or sandbox configuration is unusable.
    #[error("configuration error: {0}")]
    Config(String),

    /// A metric was requested over an empty input.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A ratio was requested over an empty denominator.
    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn backend(message: impl Into<String>) -> Self {
        Error::Backend {
            message: message.into(),
            status: None,
        }
    }

    pub fn backend_status(message: impl Into<String>, status: u16) -> Self {
        Error::Backend {
            message: message.into(),
            status: Some(status),
        }
    }

    /// True for failures that abort a single task but leave the run resumable.
    pub fn is_task_scoped(&self) -> bool {
        matches!(self, Error::Backend { .. } | Error::Fixture(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
