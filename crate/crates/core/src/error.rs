use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("coefficient evaluator returned a non-finite value at y = {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("coefficient is not elliptic: measured lower Rayleigh quotient {lower:e}")]
    NotElliptic { lower: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("zero pivot {value:e} at elimination step {step}")]
    SingularPivot { step: usize, value: f64 },
    #[error("elimination tree does not match the sparsity pattern: {0}")]
    InvalidOrdering(String),
    #[error("iterative solve stalled: relative residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error("incompatible Neumann data: |total source + total flux| = {defect:e} exceeds {tolerance:e}")]
    Incompatible { defect: f64, tolerance: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("cannot parse coefficient expression `{expr}`: {reason}")]
    Expression { expr: String, reason: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
