use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed JSON: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate object id {0:?}")]
    DuplicateId(String),

    #[error("invalid time point {0:?}")]
    InvalidTime(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("record {0:?} has no fields")]
    EmptyRecord(String),

    #[error("query has no populated dimension")]
    EmptyQuery,

    #[error("object {0:?} has a person reference without an entity id")]
    Unresolved(String),

    #[error("object {0:?} is not a candidate for this query")]
    NotCandidate(String),

    #[error("unknown scorer {0:?}")]
    UnknownScorer(String),

    #[error("index format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("index file is corrupt: checksum mismatch")]
    Checksum,

    #[error("index file is corrupt: {0}")]
    Corrupt(String),

    #[error("infeasible generator settings: {0}")]
    Infeasible(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
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
