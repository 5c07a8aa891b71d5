use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("eigenvalue {eigenvalue} lies on the branch cut of the principal logarithm")]
    BranchCut { eigenvalue: Complex64 },

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("matrix is singular")]
    Singular,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("step size underflow at t = {t:e} s")]
    StepUnderflow { t: f64 },

    #[error("inconsistent subsystem data: {0}")]
    Inconsistent(String),

    #[error("no feasible gain in grid (max honesty attained {max_honesty})")]
    Infeasible { max_honesty: f64 },

    #[error("calibration failed: {0}")]
    CalibrationFailed(String),

    #[error("missing stage input {path}: run `{stage}` first")]
    MissingStage { path: String, stage: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
