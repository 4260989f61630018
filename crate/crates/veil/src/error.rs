use std::path::PathBuf;

use thiserror::Error;
use veil_core::{ConfigError, CycleError, MetricsError, TransformError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: corrupt session file: {reason}")]
    CorruptSession { path: PathBuf, reason: String },
    #[error("{path}: {reason}")]
    BadFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("no annotation for: {}", .0.join(", "))]
    MissingAnnotation(Vec<String>),
    #[error("environment variable {0} holding the endpoint token is not set")]
    AuthMissing(String),
    #[error("endpoint unreachable: {0}")]
    EndpointUnreachable(String),
    #[error("endpoint timed out after {0} s")]
    Timeout(u64),
    #[error("endpoint returned an unusable reply: {0}")]
    BadReply(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn bad_file(path: impl Into<PathBuf>, reason: impl ToString) -> Self {
        Error::BadFile {
            path: path.into(),
            reason: reason.to_string(),
        }
    }

    /// 2 for data and configuration problems, 3 for endpoint failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AuthMissing(_)
            | Error::EndpointUnreachable(_)
            | Error::Timeout(_)
            | Error::BadReply(_) => 3,
            _ => 2,
        }
    }
}
