use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    /// Input that admits no meaningful answer, e.g. too few distinct
    /// intensities for the requested number of thresholds.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// No target energy survived (empty mask or all-zero profile).
    #[error("empty target: {0}")]
    EmptyTarget(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Training(_) => 4,
            Error::Data(_)
            | Error::Degenerate(_)
            | Error::EmptyTarget(_)
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Json(_) => 3,
        }
    }
}
