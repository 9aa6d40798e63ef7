use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter failed validation. `field` is a dotted path such as `model.beta_min`.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("invalid control schedule: {0}")]
    InvalidControl(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The requested boundary data cannot be reached under the control bounds.
    #[error("infeasible target: {reason}")]
    Infeasible {
        reason: String,
        /// Attainable range of the quantity that was out of reach, when known.
        bracket: Option<(f64, f64)>,
    },

    #[error("degenerate problem: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("population spacing diverged at t = {t}: |X_j - X_k| = {spread}")]
    SpacingDivergence { t: f64, spread: f64 },

    #[error("no enumerated candidate matched the target boundary data")]
    NoMatchedCandidates,
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn infeasible(reason: impl Into<String>) -> Self {
        Error::Infeasible {
            reason: reason.into(),
            bracket: None,
        }
    }
}
