use thiserror::Error;

use crate::fixed_point::SolveReport;

/// Errors raised by the SPD linear algebra, metric and mean layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("eigendecomposition did not converge within {sweeps} sweeps")]
    IllConditioned { sweeps: usize },

    #[error("transform is singular (|det| relative to scale = {relative_det:e})")]
    SingularTransform { relative_det: f64 },

    #[error("trace argument of the Bures-Wasserstein distance is negative ({0:e})")]
    NegativeTrace(f64),

    #[error("divergence evaluated to a negative value ({0:e})")]
    NegativeDivergence(f64),

    #[error("finite-difference step leaves the positive definite cone")]
    StepTooLarge,

    #[error("parameter {name} = {value} is out of range ({expected})")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("empty matrix tuple")]
    EmptyTuple,

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("matrix is rank deficient")]
    RankDeficient,

    #[error(
        "no convergence after {} iterations (best residual {:e})",
        best.iterations,
        best.residual
    )]
    MaxIterExceeded { best: Box<SolveReport> },

    #[error("cannot parse input: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("solution certificate failed: resolvent residual {residual:e} exceeds {limit:e}")]
    CertificateFailed { residual: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
