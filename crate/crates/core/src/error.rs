use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock truncation must be at least 2, got {0}")]
    InvalidTruncation(usize),
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("space mismatch: expected {expected} operand, found {found}")]
    SpaceMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("not a valid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("revival time is undefined for zero amplitude")]
    ZeroAmplitude,
    #[error("trace defect {defect:.3e} after step {step} exceeds 1e-6; reduce dt")]
    StepSize { defect: f64, step: usize },
    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
