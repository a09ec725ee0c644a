use std::path::PathBuf;

use cies_core::CiesError;
use cies_models::ModelError;
use thiserror::Error;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Core(#[from] CiesError),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Data(_) | HarnessError::Io { .. } => 2,
            HarnessError::Model(ModelError::Data(_) | ModelError::Stratification(_)) => 2,
            HarnessError::Model(ModelError::InvalidParameter(_) | ModelError::Unknown { .. }) => 1,
            HarnessError::Model(_) | HarnessError::Core(_) => 2,
            HarnessError::Invariant(_) => 3,
        }
    }
}
