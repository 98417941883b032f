use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine and its I/O layer.
///
/// The variants map onto the three failure classes the CLI distinguishes:
/// configuration/usage problems, bad input data, and protocol violations
/// that indicate a broken invariant inside a run.
#[derive(Debug, Error)]
pub enum PoqError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PoqError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        PoqError::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        PoqError::Data(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        PoqError::Protocol(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PoqError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's configuration rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(self, PoqError::Config(_))
    }
}

pub type Result<T, E = PoqError> = std::result::Result<T, E>;
