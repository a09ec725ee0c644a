use thiserror::Error;

pub type Result<T, E = CiesError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CiesError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    /// The explanation has zero (weighted) magnitude, so no relative change
    /// can be measured against it.
    #[error("degenerate explanation: attribution magnitude is zero")]
    DegenerateExplanation,

    #[error("empty sample")]
    EmptySample,

    #[error("degenerate test: all paired differences are zero")]
    DegenerateTest,

    #[error("undefined correlation: zero rank variance")]
    UndefinedCorrelation,

    #[error("undefined estimate: every neighbor coincides with the origin")]
    UndefinedEstimate,
}

impl CiesError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CiesError::InvalidParameter(msg.into())
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CiesError::Dimension { expected, found })
    }
}
