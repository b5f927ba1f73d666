use crate::certificate::Certificate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by the operator layer, the solvers and the adapters.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite entry at index {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty vector: dimension must be at least 1")]
    EmptyVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside operator domain: {point:?}")]
    Domain { point: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("linear solve failed: {0}")]
    Factorization(String),

    #[error("line search stalled at iteration {iteration} after {backtracks} backtracks")]
    LineSearchStalled {
        iteration: usize,
        backtracks: usize,
        best: Option<Box<Certificate>>,
    },

    #[error("stagnation: {steps} consecutive zero steps with residual {residual:e} above target")]
    Stagnation {
        steps: usize,
        residual: f64,
        best: Box<Certificate>,
    },

    #[error("evaluation budget exhausted after {f_evals} operator evaluations")]
    Budget {
        f_evals: u64,
        best: Option<Box<Certificate>>,
    },

    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NonConvergence {
        iterations: usize,
        best_residual: f64,
        best: Box<Certificate>,
    },

    #[error("iterates diverged: norm {norm:e} exceeds {threshold:e} at iteration {iteration}")]
    Diverged {
        iteration: usize,
        norm: f64,
        threshold: f64,
    },

    #[error("outer iteration {outer}: {source}")]
    Inner {
        outer: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown problem: {0}")]
    UnknownProblem(String),

    #[error("problem file: {0}")]
    ProblemFile(String),
}

impl Error {
    /// Best certificate carried by a failed solve, if any.
    pub fn best_certificate(&self) -> Option<&Certificate> {
        match self {
            Error::LineSearchStalled { best, .. } | Error::Budget { best, .. } => best.as_deref(),
            Error::Stagnation { best, .. } | Error::NonConvergence { best, .. } => Some(best),
            Error::Inner { source, .. } => source.best_certificate(),
            _ => None,
        }
    }

    /// Innermost error once outer-loop context is stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Inner { source, .. } => source.root(),
            e => e,
        }
    }
}
