use thiserror::Error;

pub type Result<T, E = RsrError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RsrError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: {0}")]
    DimensionError(String),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPd { min_eigenvalue: f64 },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("estimator update collapsed to a rank-0 matrix")]
    DegenerateUpdate,
    #[error("estimator did not converge in {iterations} iterations (last step {last_delta:e})")]
    NotConverged { iterations: usize, last_delta: f64 },
    #[error("TME on the projected inliers failed: {0}")]
    InlierTmeFailed(String),
    #[error("outlier {index} lies on the reference subspace")]
    OutlierOnSubspace { index: usize },
    #[error("regime violation: dssnr = {dssnr} must exceed gamma = {gamma}")]
    RegimeViolation { dssnr: f64, gamma: f64 },
    #[error("angle profile infeasible: {0}")]
    InfeasibleAngles(String),
    #[error("degenerate inlier support (expansion estimate {estimate:e})")]
    DegenerateSupport { estimate: f64 },
    #[error("ground truth is required for this operation")]
    NeedsGroundTruth,
    #[error("dataset format error: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RsrError {
    fn from(e: std::io::Error) -> Self {
        RsrError::Io(e.to_string())
    }
}
