use std::path::PathBuf;

use dbr_core::DbrError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] DbrError),
    #[error("{failed} acceptance criteria failed")]
    CriteriaFailed { failed: usize },
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for I/O failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Io { .. } => 2,
            _ => 1,
        }
    }
}
