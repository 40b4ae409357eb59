use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid ontology: {0}")]
    Validation(String),

    #[error("unknown concept id {0:?}")]
    UnknownConcept(String),

    #[error("span {0:?} contains no content token")]
    StopwordSpan(String),

    #[error("degenerate training corpus: {0}")]
    DegenerateCorpus(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("adapter protocol violation: {0}")]
    Protocol(String),

    #[error("adapter timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("prediction failed for batch item {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("cannot fit surrogate: {0}")]
    Fit(String),

    #[error("empty explanation word set")]
    EmptySpan,

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
