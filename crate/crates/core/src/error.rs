use thiserror::Error;

/// Errors raised by the toolkit. Display strings start with a stable tag so
/// callers (and the CLI) can name the invariant that failed.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-dataset: operation needs at least one record")]
    EmptyDataset,

    #[error("empty-input: {0}")]
    EmptyInput(&'static str),

    #[error("degenerate-class: need at least one positive and one negative (positives={positives}, negatives={negatives})")]
    DegenerateClass { positives: usize, negatives: usize },

    #[error("unnormalized-prediction: value {value} at index {index} is outside [0, 1]")]
    UnnormalizedPrediction { index: usize, value: f64 },

    #[error("length-mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("missing-score: score `{name}` absent on records {ids:?}")]
    MissingScore { name: String, ids: Vec<String> },

    #[error("invalid-joint: {0}")]
    InvalidJoint(String),

    #[error("support-mismatch: distributions are defined on different supports")]
    SupportMismatch,

    #[error("out-of-range: {what} = {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("non-finite-input: {0}")]
    NonFinite(&'static str),

    #[error("dimension-mismatch: expected input dimension {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("split-degenerate: {0}")]
    SplitDegenerate(String),

    #[error("both-classes-unattainable: no draw of {k} records contained both classes after {attempts} attempts")]
    BothClassesUnattainable { k: usize, attempts: usize },

    #[error("sample-too-large: requested {k} records from {n}")]
    SampleTooLarge { k: usize, n: usize },

    #[error("duplicate-id: `{0}`")]
    DuplicateId(String),

    #[error("invalid-record: record `{id}`: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("parse-error: line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("version-mismatch: expected mapper format version {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("invalid-config: {0}")]
    InvalidConfig(String),

    #[error("io-error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization-error: {0}")]
    Serialization(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
