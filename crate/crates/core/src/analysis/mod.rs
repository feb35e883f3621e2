//! Metrics, bound constants, per-trajectory inequality checks and
//! Monte-Carlo checks.

mod bounds;
mod checks;
mod metrics;
mod montecarlo;

pub use bounds::*;
pub use checks::*;
pub use metrics::*;
pub use montecarlo::*;

use thiserror::Error;

use crate::solver::SolverError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("{what} has length {found}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("bounds carry no Slater margin epsilon")]
    MissingEpsilon,
    #[error("t0 must be a positive integer")]
    InvalidT0,
    #[error("mu must lie strictly between 0 and 1, got {0}")]
    MuOutOfRange(f64),
    #[error("{got} seeds given, at least {need} required")]
    InsufficientSeeds { got: usize, need: usize },
    #[error("slope fit needs at least 3 distinct positive horizons")]
    DegenerateGrid,
    #[error("metric value {value} at index {index} is not positive; shift the series first")]
    NonPositiveMetric { index: usize, value: f64 },
    #[error("round {0} is outside the trajectory")]
    RoundOutOfRange(usize),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
