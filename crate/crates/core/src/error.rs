use thiserror::Error;

use crate::units::UnitError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Unit(#[from] UnitError),

    #[error("invalid window: {0}")]
    InvalidSpace(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid reference measure: c must be a positive finite length, got {0}")]
    InvalidReference(f64),

    #[error("invalid test function: {0}")]
    InvalidTestFunction(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} lies outside the window")]
    OutOfWindow { point: Vec<f64> },

    #[error("pattern has coincident points; densities exist only for simple processes")]
    DuplicatePoints,

    #[error("grid has {grid} cells per axis but the model was built on {model}")]
    GridMismatch { grid: usize, model: usize },

    #[error("models live on different windows or grids")]
    SpaceMismatch,

    #[error("cardinality tail mass {tail:e} beyond n_max = {n_max} exceeds tolerance {tolerance:e}")]
    TruncationTooShort { n_max: usize, tail: f64, tolerance: f64 },

    #[error("quadrature over the {n}-point slice needs {work} evaluations (budget {budget})")]
    QuadratureBudget { n: usize, work: f64, budget: f64 },

    #[error("differentials of order {0} are not supported")]
    DifferentialOrder(usize),

    #[error("numerical differentiation did not converge: {0}")]
    NonConvergent(String),

    #[error("density is not positive where the process has mass: {0}")]
    NonpositiveDensity(String),

    #[error("reference model assigns zero density where the first model has mass (slice n = {n})")]
    AbsoluteContinuityViolation { n: usize },

    #[error("no closed form registered for {0}")]
    UnsupportedModel(String),

    #[error("MAP and set-form MAP disagree: {0}")]
    EstimatorDisagreement(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
