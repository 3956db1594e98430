use thiserror::Error;

use crate::verify::ViolationBundle;

pub type Result<T, E = HkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum HkError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid opinion state: {0}")]
    InvalidState(String),

    #[error("non-finite coordinate in state at step {step}")]
    NonFinite { step: u64 },

    #[error("eigensolver failure: {0}")]
    Solver(String),

    #[error(
        "rational replay aborted at step {step}: coordinate needs {bits} bits (bound {bound})"
    )]
    DenominatorExplosion { step: u64, bits: u64, bound: u64 },

    #[error("verification failed: {check} at step {step} (slack {slack:e}, tolerance {tol:e})",
        check = .0.check, step = .0.step, slack = .0.slack, tol = .0.tol)]
    Violation(Box<ViolationBundle>),

    #[error("trajectory invariant broken: {0}")]
    Trajectory(String),

    #[error("scaling fit rejected: {0}")]
    Fit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
