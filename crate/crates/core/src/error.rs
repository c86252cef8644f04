use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid sequence {id}: {reason}")]
    InvalidSequence { id: String, reason: String },

    #[error("sample size {requested} exceeds cloud size {available}")]
    SampleSizeExceedsCloud { requested: usize, available: usize },

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("every key point had an empty neighbourhood in at least one branch")]
    NoSurvivingKeys,

    #[error("{path}: byte length {len} is not a multiple of 16")]
    TruncatedFile { path: PathBuf, len: u64 },

    #[error("{path}: unreadable: {source}")]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("count mismatch for {what}: manifest says {expected}, found {found}")]
    CountMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("sequence mismatch: {0}")]
    SequenceMismatch(String),

    #[error("clean reference value must be positive, got {0}")]
    NonPositiveClean(f64),

    #[error("need at least {needed} values, got {got}")]
    InsufficientValues { needed: usize, got: usize },

    #[error("key mismatch: {0}")]
    KeyMismatch(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
