use thiserror::Error;

use crate::generator::ViolationReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("not a rate matrix: {0}")]
    NotQMatrix(ViolationReport),

    /// An endpoint `q0 + λ q` of an uncertainty interval is not a rate matrix.
    #[error("invalid generator at lambda = {lambda}: {report}")]
    InvalidGenerator { lambda: f64, report: ViolationReport },

    #[error("invalid generator family: {0}")]
    InvalidFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("member index {index} out of bounds for a family of {len}")]
    IndexOutOfBounds { index: usize, len: usize },

    #[error("solution became non-finite at step {step}")]
    Diverged { step: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
