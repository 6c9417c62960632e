use std::path::PathBuf;

use lgdepth_core::grid::GridError;
use lgdepth_core::metrics::MetricsError;
use lgdepth_core::perturbation::MaskError;
use lgdepth_core::relations::InvalidLambda;
use lgdepth_core::sentences::SentenceError;
use thiserror::Error;

use crate::formats::FormatError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("validation: {0}")]
    Validation(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("argument: {0}")]
    Argument(String),
    #[error("missing predictions for {} image(s): {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Sentence(#[from] SentenceError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Lambda(#[from] InvalidLambda),
}

impl Error {
    /// Stable short name used in machine-readable error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::Json { .. } => "json",
            Error::Validation(_) | Error::Grid(_) => "validation",
            Error::Config(_) | Error::Sentence(SentenceError::MissingCaptions(_)) => "config",
            Error::Argument(_) | Error::Lambda(_) => "argument",
            Error::MissingPredictions(_) => "missing_predictions",
            Error::Sentence(_) => "sentence",
            Error::Metrics(_) => "metrics",
            Error::Mask(_) => "mask",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
