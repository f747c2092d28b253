use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The instance cannot be placed in a community: its label or its
    /// sensitive value is missing.
    #[error("cannot classify instance into a community: {0}")]
    ClassificationImpossible(&'static str),

    #[error("schema violation: {0}")]
    SchemaViolation(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("statistic is undefined: {0}")]
    UndefinedStatistic(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
