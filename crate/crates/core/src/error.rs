use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at node {index}")]
    NonFinite { index: usize },

    #[error("input must have zero mean (mean = {mean:e})")]
    MeanViolation { mean: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("inner solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("degenerate weight: {0}")]
    DegenerateWeight(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("z is supported in the vacuum region (weighted norm vanishes)")]
    VacuumSupport,

    #[error("singular deformation gradient at label {label} (det = {det:e})")]
    SingularMap { label: usize, det: f64 },

    #[error("marker spacing ratio {ratio:.2} exceeds {limit}; reseeding required")]
    ReseedRequired { ratio: f64, limit: f64 },

    #[error("fixed-point iteration diverged on slice {slice} (expansion factor {factor:.4})")]
    Diverged { slice: usize, factor: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
