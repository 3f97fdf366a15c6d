use std::path::PathBuf;

use scenelayer_core::augment::{AugmentError, ClientError};
use scenelayer_core::embedding::EmbeddingError;
use scenelayer_core::metrics::MetricError;
use scenelayer_core::ScenarioError;

use crate::corpus::CorpusError;

/// Process exit codes, one per error class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const SCHEMA: i32 = 3;
    pub const CORPUS: i32 = 4;
    pub const IO: i32 = 5;
    pub const CLIENT_UNAVAILABLE: i32 = 6;
    pub const PROVIDER_UNAVAILABLE: i32 = 7;
    pub const EXHAUSTED_REPAIRS: i32 = 8;
    pub const STRICT_QUARANTINE: i32 = 9;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("{0} scenario(s) quarantined in strict mode")]
    StrictQuarantine(usize),
    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => exit::USAGE,
            Error::Io { .. } => exit::IO,
            Error::Corpus(CorpusError::Io { .. }) => exit::IO,
            Error::Corpus(CorpusError::Schema { .. }) => exit::SCHEMA,
            Error::Corpus(_) => exit::CORPUS,
            Error::Scenario(_) => exit::SCHEMA,
            Error::Augment(AugmentError::Client(ClientError::ClientUnavailable(_))) => {
                exit::CLIENT_UNAVAILABLE
            }
            Error::Augment(AugmentError::ExhaustedRepairs { .. }) => exit::EXHAUSTED_REPAIRS,
            Error::Augment(AugmentError::InvalidRequest(_) | AugmentError::InvalidConfig(_)) => {
                exit::USAGE
            }
            Error::Augment(AugmentError::MissingTaskText(_)) => exit::USAGE,
            Error::Embedding(EmbeddingError::ProviderUnavailable(_))
            | Error::Metric(MetricError::Embedding(EmbeddingError::ProviderUnavailable(_))) => {
                exit::PROVIDER_UNAVAILABLE
            }
            Error::StrictQuarantine(_) => exit::STRICT_QUARANTINE,
            Error::Embedding(_) | Error::Metric(_) | Error::Other(_) => exit::OTHER,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
