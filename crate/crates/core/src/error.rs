use std::path::PathBuf;

use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("concept `{concept}`: expected exactly two poles, found {found}")]
    MissingPole { concept: String, found: usize },

    #[error("concept `{concept}`, pole `{pole}`: word `{word}` occurs more than once after normalization")]
    DuplicateWord { concept: String, pole: String, word: String },

    #[error("concept `{concept}`: {field} is empty")]
    EmptyLabel { concept: String, field: String },

    #[error("concept `{concept}`, pole `{pole}`: needs at least 2 words, found {found}")]
    TooFewWords { concept: String, pole: String, found: usize },

    #[error("store validation failed: {0}")]
    Validation(ValidationReport),

    #[error("{file}:{line}: {message}")]
    Parse { file: PathBuf, line: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot average an empty list of occurrences")]
    EmptyOccurrences,

    #[error("vector length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("zero-length vector")]
    ZeroVector,

    #[error("anchor pole `{pole}` has no stored vectors for word `{word}`")]
    EmptyAnchor { pole: String, word: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("perplexity {perplexity} too large for {n} points (max {max})")]
    PerplexityTooLarge { perplexity: f64, n: usize, max: f64 },

    #[error("computation cancelled")]
    Cancelled,

    #[error("distance consistency needs at least two classes")]
    SingleClass,

    #[error("density grid is flat (maximum is zero)")]
    FlatGrid,

    #[error("no prediction records for word `{0}`")]
    NoPredictions(String),

    #[error("model `{0}` has no prediction head")]
    ModelHasNoHead(String),

    #[error("clustering needs at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
