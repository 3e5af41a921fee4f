//! Crate-wide error type.

use std::path::PathBuf;

/// A single configuration invariant violation, with the offending field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    /// Dotted path of the offending key, e.g. `retrieval.temperature`.
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid frame {frame_id}: {reason}")]
    InvalidFrame { frame_id: u64, reason: String },

    #[error("out-of-order frame id {got} (last ingested {last})")]
    OutOfOrderFrame { got: u64, last: u64 },

    #[error("channel map dimension mismatch: {left_w}x{left_h} vs {right_w}x{right_h}")]
    DimensionMismatch {
        left_w: u32,
        left_h: u32,
        right_w: u32,
        right_h: u32,
    },

    #[error("configuration invalid:\n{}", format_violations(.0))]
    Config(Vec<ConfigViolation>),

    #[error("partition {partition_id} is {reason}")]
    BadPartition { partition_id: u64, reason: String },

    #[error("embedding error: {0}")]
    Embedding(String),

    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    EmbeddingDimension { expected: usize, got: usize },

    #[error("memory store: {0}")]
    Store(String),

    #[error("duplicate index id {0}")]
    DuplicateIndexId(u64),

    #[error("unknown cluster id {0}")]
    UnknownCluster(u64),

    #[error("memory empty")]
    MemoryEmpty,

    #[error("retrieval: {0}")]
    Retrieval(String),

    #[error("reasoner: {0}")]
    Reasoner(String),

    #[error("unknown strategy name {0:?}")]
    UnknownStrategy(String),

    #[error("pipeline: {0}")]
    Pipeline(String),

    #[error("stream source: {0}")]
    Source(String),

    #[error("http request to {url} failed after {attempts} attempt(s): {reason}")]
    Http {
        url: String,
        attempts: u32,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec: {0}")]
    Image(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_violations(violations: &[ConfigViolation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
