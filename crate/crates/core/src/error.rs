use crate::prelude::*;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the core library.
///
/// Input errors (`Dimension`, `InvalidInput`, `Unsupported`) are distinguished
/// from runtime failures (`DegenerateSet`, `Solver`, `NoCrossing`, ...) so
/// front ends can map them to different exit codes.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("dimension {p} exceeds the brute-force limit {max}")]
    DimensionTooLarge { p: usize, max: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix is near singular (smallest eigenvalue {min_eigenvalue:e})")]
    NearSingular { min_eigenvalue: f64 },
    #[error("degenerate error set: accepted 0 of {proposals} proposals")]
    DegenerateSet { proposals: usize },
    #[error("solver diverged after {iters} iterations")]
    Solver { iters: usize, objective_trace: Vec<f64> },
    #[error("no crossing of threshold {threshold} in n range [{lo}, {hi}]")]
    NoCrossing { threshold: f64, lo: usize, hi: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by bad caller input rather than a numerical or
    /// sampling failure at runtime.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Dimension { .. }
                | Error::DimensionTooLarge { .. }
                | Error::InvalidInput(_)
                | Error::Unsupported(_)
                | Error::NotPositiveDefinite
                | Error::NearSingular { .. }
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
