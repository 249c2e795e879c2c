use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoherenceError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoherenceError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("photon-number tail did not fall below {tol:e} within {cap} terms")]
    Truncation { tol: f64, cap: usize },

    /// Mean click number (or mean photon number) is zero, so normalized
    /// coherences cannot be formed.
    #[error("no signal: mean count is zero")]
    NoSignal,

    #[error("coherence is undefined for the vacuum state")]
    UndefinedCoherence,

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CoherenceError {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Self::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}
