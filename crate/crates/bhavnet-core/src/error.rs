//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Two tensor shapes that must be compatible are not.
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    /// An operation received structurally invalid input (empty vector,
    /// misaligned lists, length mismatch, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of its legal range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A numeric evaluation produced NaN or infinity.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// A data file violated its format; `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },

    /// A data file is not valid UTF-8.
    #[error("{path}: {message}")]
    Encoding { path: String, message: String },

    /// An edge references a node outside the graph.
    #[error("graph error: {0}")]
    Graph(String),

    /// A checkpoint file is corrupt, truncated, or of the wrong version.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// A token is missing from the embedding table.
    #[error("unknown token {token:?} (language {language:?})")]
    Vocabulary { token: String, language: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an I/O failure with the path it occurred on.
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
