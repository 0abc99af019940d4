use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch { op: &'static str, left: Vec<usize>, right: Vec<usize> },

    #[error("token id {id} out of range for table of size {size}")]
    IdOutOfRange { id: usize, size: usize },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NotScalar(Vec<usize>),

    #[error("backward called on a tensor that does not depend on any tracked value")]
    Untracked,

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },

    #[error("invalid split ratio {0}; expected 0 < ratio < 1")]
    InvalidRatio(f64),

    #[error("split of {total} pairs at ratio {ratio} leaves an empty side")]
    DegenerateSplit { total: usize, ratio: f64 },

    #[error("non-finite gradient for parameter `{0}`")]
    NonFiniteGradient(String),

    #[error("batch contains no non-pad target tokens")]
    NoTargetTokens,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for failures caused by bad input data rather than a runtime fault.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::Numeric(_) | Error::NonFiniteGradient(_) | Error::Io { .. })
    }
}

/// Failures while reading or validating a checkpoint file.
#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,

    #[error("unsupported checkpoint format version {found} (supported: {supported})")]
    UnsupportedVersion { found: u32, supported: u32 },

    #[error("checkpoint is truncated or corrupt: {0}")]
    Corrupt(String),

    #[error("checkpoint checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error("{side} vocabulary fingerprint mismatch: checkpoint has {expected}, session has {found}")]
    FingerprintMismatch { side: &'static str, expected: String, found: String },

    #[error("model configuration differs from checkpoint: {0}")]
    ConfigMismatch(String),
}
