use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("projection not available for this set kind")]
    ProjectionUnavailable,

    #[error("composite oracle not available for this set and regularizer")]
    CompositeOracleUnavailable,

    #[error("initial point is not feasible")]
    InfeasibleStart,

    #[error("non-finite objective value at iteration {k}")]
    NonFiniteObjective { k: usize },

    #[error("line search encountered a non-finite value at gamma = {gamma}")]
    LineSearchNonFinite { gamma: f64 },

    #[error("stepsize rule `{0}` has no open-loop schedule")]
    NotOpenLoop(&'static str),

    #[error("all sampled pairs were degenerate")]
    DegenerateSample,

    #[error("gradient unavailable at sampled point {0:?}")]
    GradientUnavailable(Vec<f64>),

    #[error("not enough usable points for a rate fit: {usable} usable, need {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("invalid descriptor field `{field}`: {reason}")]
    InvalidDescriptor { field: String, reason: String },

    #[error("problems differ between compared experiments: {0}")]
    MismatchedProblems(String),

    #[error("unknown case `{0}`")]
    UnknownCase(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
