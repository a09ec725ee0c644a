use cies_core::CiesError;
use thiserror::Error;

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Core(#[from] CiesError),

    #[error("stratification impossible: class {0} has no rows")]
    Stratification(u8),

    #[error("preprocessor used before it was fitted")]
    NotFitted,

    #[error("{features} features exceed the exact Shapley cap of {cap}")]
    TooManyFeatures { features: usize, cap: usize },

    #[error("dimension mismatch: model expects {expected} features, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}
