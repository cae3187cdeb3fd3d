//! Crate-wide error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A snapshot sequence too short to difference (< 2 snapshots).
    #[error("trace has fewer than two snapshots")]
    EmptyTrace,

    /// A cumulative counter decreased between snapshots with wrap tolerance off.
    #[error("counter {feature} decreased at snapshot {index} (wrap or corrupt trace)")]
    NonMonotonicCounter { feature: usize, index: usize },

    /// Vector lengths disagree with the feature schema or with each other.
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    /// A trace file line failed to parse or violated the format.
    #[error("parse error at line {line}: {reason}")]
    ParseError { line: usize, reason: String },

    /// File format version this build does not understand.
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    /// Structural trace violation (index ordering, irregular interval width).
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("unknown benchmark '{0}'")]
    UnknownBenchmark(String),

    /// Tensor dimensions disagree in a numeric kernel.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A model or synthesis spec fails validation.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// The model carries no normalization stats; inputs cannot be normalized.
    #[error("model carries no normalization stats; train it or load a trained checkpoint")]
    UnnormalizedInput,

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("missing IPC labels: {0}")]
    MissingLabels(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
