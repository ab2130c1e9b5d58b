use thiserror::Error;

/// Errors produced while validating inputs, fitting, or reading/writing files.
#[derive(Debug, Error)]
pub enum MppcError {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("parameter `{0}` must be positive")]
    NonPositiveParam(&'static str),
    #[error("point cloud is empty or has zero total mass")]
    EmptyCloud,
    #[error("fidelity exponent p = {0} is not supported here")]
    UnsupportedExponent(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("tridiagonal system is singular (no projected mass and free endpoints)")]
    SingularSystem,
    #[error("invalid edge ({0}, {1})")]
    InvalidEdge(usize, usize),
    #[error("invalid edge range starting at {start} with {count} edges")]
    InvalidRange { start: usize, count: usize },
    #[error("input `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },
    #[error("row {row} has {found} fields, expected {expected}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("malformed result document: {0}")]
    Schema(String),
    #[error("unknown dataset kind `{0}`")]
    UnknownKind(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MppcError>;
