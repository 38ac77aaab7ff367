use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input matrix is not symmetric: ||M - M^T||_F = {deviation:e} exceeds {allowed:e}")]
    AsymmetricInput { deviation: f64, allowed: f64 },

    #[error("tolerance `{name}` = {value} must lie in (0, 1)")]
    InvalidTolerance { name: &'static str, value: f64 },

    #[error("vector must be nonzero")]
    ZeroVector,

    #[error("matrix must be nonzero")]
    ZeroMatrix,

    #[error("vector is not in the range of the matrix (residual {residual:e})")]
    OutOfRange { residual: f64 },

    #[error("symmetric eigensolver did not converge (matrix digest {digest})")]
    ConvergenceFailure { digest: String },

    #[error("invalid separation report: {0}")]
    InvalidReport(String),

    #[error("witness root construction failed: {0}")]
    RootFailure(String),

    #[error("combined function is not affine (quadratic residual {residual:e})")]
    NotReducible { residual: f64 },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("point cloud is degenerate (hull has empty interior)")]
    DegenerateCloud,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
}
