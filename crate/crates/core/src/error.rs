use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} samples, grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },
    #[error("x = {x} outside interpolation range [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("empty domain: {0}")]
    EmptyDomain(String),
    #[error("degenerate interval [{0}, {1}]")]
    DegenerateInterval(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton iteration did not converge: residual {residual:e} after {iterations} iterations at t = {t}")]
    NewtonDiverged { t: f64, iterations: usize, residual: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("time step underflow: dt = {dt:e} at t = {t}")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid snapshot schedule: {0}")]
    InvalidSchedule(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("no snapshot at t = {0}")]
    MissingSnapshot(f64),
    #[error("window [{x_a}, {x_b}] out of range: {reason}")]
    WindowOutOfRange { x_a: f64, x_b: f64, reason: String },
    #[error("residuals must be positive for an order estimate, got {0:e} and {1:e}")]
    NonPositiveResidual(f64, f64),
    #[error("invalid study: {0}")]
    InvalidStudy(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
