use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid register layout: {0}")]
    Layout(String),

    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("unknown register label `{0}`")]
    UnknownLabel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("dimension {dim} exceeds the configured guard {guard}")]
    DimensionGuard { dim: usize, guard: usize },

    #[error("invalid cut: {0}")]
    InvalidCut(String),

    #[error("round {round}: {detail}")]
    Shape { round: usize, detail: String },

    #[error("recovery map for step {step}: {detail}")]
    RecoveryShape { step: usize, detail: String },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("state for x={x} leaves the compression support (residual {residual:e})")]
    SupportViolation { x: u64, residual: f64 },

    #[error("unknown built-in `{0}`")]
    UnknownBuiltin(String),

    #[error("bad parameter: {0}")]
    Param(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
