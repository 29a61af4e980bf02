use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = EngineError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown explanation `{0}`")]
    UnknownExplanation(String),

    #[error("unknown job `{0}`")]
    UnknownJob(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error(transparent)]
    Core(#[from] conceptlens::Error),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EngineError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EngineError::Io { path: path.into(), source }
    }

    /// Coarse error class reported to clients.
    pub fn category(&self) -> &'static str {
        use conceptlens::Error as E;
        match self {
            EngineError::UnknownModel(_) => "UnknownModel",
            EngineError::UnknownExplanation(_) => "UnknownExplanation",
            EngineError::UnknownJob(_) => "UnknownJob",
            EngineError::BadRequest(_) => "BadRequest",
            EngineError::Io { .. } | EngineError::Core(E::Io { .. }) => "IoError",
            EngineError::Core(E::Parse { .. }) => "ParseError",
            EngineError::Core(E::Validation(_)) => "ValidationError",
            EngineError::Core(
                E::MissingPole { .. } | E::DuplicateWord { .. } | E::EmptyLabel { .. } | E::TooFewWords { .. },
            ) => "ConceptError",
            EngineError::Core(E::Config(_) | E::ModelHasNoHead(_) | E::InvalidParams(_)) => "ConfigError",
            EngineError::Core(E::Cancelled) => "Cancelled",
            EngineError::Core(_) => "ComputationError",
        }
    }

    /// The specific rule or condition behind the error.
    pub fn reason(&self) -> &'static str {
        use conceptlens::Error as E;
        match self {
            EngineError::Core(e) => match e {
                E::MissingPole { .. } => "MissingPole",
                E::DuplicateWord { .. } => "DuplicateWord",
                E::EmptyLabel { .. } => "EmptyLabel",
                E::TooFewWords { .. } => "TooFewWords",
                E::Validation(_) => "Validation",
                E::Parse { .. } => "Parse",
                E::Io { .. } => "Io",
                E::EmptyOccurrences => "EmptyOccurrences",
                E::LengthMismatch { .. } => "LengthMismatch",
                E::ZeroVector => "ZeroVector",
                E::EmptyAnchor { .. } => "EmptyAnchor",
                E::DegenerateData(_) => "DegenerateData",
                E::PerplexityTooLarge { .. } => "PerplexityTooLarge",
                E::Cancelled => "Cancelled",
                E::SingleClass => "SingleClass",
                E::FlatGrid => "FlatGrid",
                E::NoPredictions(_) => "NoPredictions",
                E::ModelHasNoHead(_) => "ModelHasNoHead",
                E::TooFewPoints { .. } => "TooFewPoints",
                E::InvalidParams(_) => "InvalidParams",
                E::Config(_) => "Config",
            },
            other => other.category(),
        }
    }
}
