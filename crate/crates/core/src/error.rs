use thiserror::Error;

/// Errors shared by the geometry, field, dynamics and analytic layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside chart domain: {0}")]
    ChartDomain(String),
    #[error("embedding invariant violated, residual {residual:.3e}")]
    EmbeddingViolation { residual: f64 },
    #[error("axis singularity at r = {r:.3e}")]
    AxisSingularity { r: f64 },
    #[error("operation not defined for this model or plane: {0}")]
    Unsupported(String),
    #[error("shift amount is zero; gauge function degenerates")]
    DegenerateShift,
    #[error("gauge arctan branch singular at sin(phi') = 0")]
    BranchSingularity,
    #[error("lambda = mc^2/E must lie in (0, 1), got {0}")]
    InvalidLambda(f64),
    #[error("no fixed-radius orbit at r0 = {0}")]
    InvalidRadius(f64),
    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("argument outside inverse-function domain: {0}")]
    OutsideDomain(String),
    #[error("azimuth branch continuation failed: {0}")]
    BranchError(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
