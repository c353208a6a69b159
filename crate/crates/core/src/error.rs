use std::fmt::Debug;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OtError {
    #[error("measure has no support points")]
    EmptyMeasure,
    #[error("{points} points but {weights} weights")]
    LengthMismatch { points: usize, weights: usize },
    #[error("point {index} has dimension {found}, expected {expected}")]
    MixedDimensions {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("weight {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("total mass is zero")]
    ZeroTotalMass,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid cost: {0}")]
    InvalidCost(String),
    #[error("non-finite cost between source {source_index} and target {target_index}")]
    NonFiniteCost {
        source_index: usize,
        target_index: usize,
    },
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("dual constraint violated at ({source_index}, {target_index}) by {excess:e}")]
    DualInfeasible {
        source_index: usize,
        target_index: usize,
        excess: f64,
    },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("enumeration budget exceeded: {needed:e} tuples > {budget:e}")]
    BudgetExceeded { needed: f64, budget: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("incompatible data: {0}")]
    Incompatible(String),
    #[error("support point {index} lies outside the grid")]
    SupportOutsideGrid { index: usize },
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

pub type Result<T, E = OtError> = std::result::Result<T, E>;

/// Failure of an iterative solver that still carries its best iterate.
#[derive(Debug, Error)]
pub enum SolveError<T: Debug> {
    #[error(transparent)]
    Invalid(#[from] OtError),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        partial: Box<T>,
    },
}

impl<T: Debug> SolveError<T> {
    /// Drops the partial iterate.
    pub fn into_ot_error(self) -> OtError {
        match self {
            SolveError::Invalid(e) => e,
            SolveError::NonConvergence {
                iterations,
                residual,
                ..
            } => OtError::NonConvergence {
                iterations,
                residual,
            },
        }
    }
}
