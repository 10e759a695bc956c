use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QcoolError {
    #[error("index out of range: {0}")]
    Index(String),

    #[error("wrong subsystem type: {0}")]
    Type(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("operator does not conserve the excitation number (largest off-block entry {max_off:.3e})")]
    ConservationViolation { max_off: f64 },

    #[error("truncation leakage {leakage:.3e} exceeds tolerance {tol:.3e}")]
    Truncation { leakage: f64, tol: f64 },

    #[error("no time with residual <= {tol:.1e} in the search window; best t = {best_t:.6}, residual {best_residual:.3e}")]
    SearchFailure {
        best_t: f64,
        best_residual: f64,
        tol: f64,
    },

    #[error("structure check failed with residual {residual:.3e}")]
    CheckFailed { residual: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, QcoolError>;
