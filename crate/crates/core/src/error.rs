use thiserror::Error;

use crate::olevskii::ValidationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular to working precision (sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e})")]
    Singular { sigma_min: f64, sigma_max: f64 },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("index {index} out of range 1..={len}")]
    InvalidIndex { index: usize, len: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("biorthogonality violated: max deviation {deviation:e} exceeds {tolerance:e}")]
    NotBiorthogonal { deviation: f64, tolerance: f64 },

    #[error(
        "insufficient cardinality at level {level}: window for exponent {exponent} holds {found} values, {required} required"
    )]
    InsufficientCardinality {
        level: usize,
        exponent: usize,
        found: usize,
        required: usize,
    },

    #[error("plan rejected: {} violation(s)", .0.violations.len())]
    PlanRejected(ValidationReport),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason: reason.into(),
        }
    }

    /// True for failures that mean a hypothesis or plan check did not hold,
    /// as opposed to malformed input.
    pub fn is_validation_failure(&self) -> bool {
        matches!(
            self,
            Error::PlanRejected(_) | Error::InsufficientCardinality { .. }
        )
    }
}
