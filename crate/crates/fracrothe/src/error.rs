use thiserror::Error;

/// Errors produced by grid construction, the stepper and the evaluators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },

    #[error("delay {delay} exceeds horizon {horizon}")]
    DelayExceedsHorizon { delay: f64, horizon: f64 },

    #[error("time step {step} must be below min(1, delay) = {limit}")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("fractional order must lie in (0, 1), got {0}")]
    OrderOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty difference history")]
    EmptyHistory,

    #[error("index {index} outside [{min}, {max}]")]
    IndexOutOfRange { index: i64, min: i64, max: i64 },

    #[error("linear solve failed: {0}")]
    SolveFailure(String),

    #[error("forcing returned a non-finite value at step {step_index}")]
    NonFiniteForcing { step_index: usize },

    #[error("run aborted at step {step_index}: non-finite state")]
    Aborted { step_index: usize },

    #[error("t = {t} outside evaluation domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("no fractional term with index {0}")]
    BadTermIndex(usize),

    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),

    #[error("exponent must satisfy {constraint}, got {value}")]
    BadExponent { constraint: &'static str, value: f64 },

    #[error("adaptive quadrature failed to reach the requested tolerance")]
    QuadratureNonConvergence,
}
