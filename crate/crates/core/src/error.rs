use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid molecular parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("no bound states: lambda = {lambda} must exceed 1/2")]
    NoBoundStates { lambda: f64 },

    #[error("level index {index} out of range (highest bound level is {n_max})")]
    IndexOutOfRange { index: usize, n_max: usize },

    #[error("numeric overflow evaluating {what}")]
    NumericOverflow { what: String },

    #[error("quadrature orthonormality residual {residual:e} exceeds {tolerance:e}")]
    QuadratureAccuracy { residual: f64, tolerance: f64 },

    #[error("coherent state truncation leaks {leakage:e} of the norm (limit {limit:e})")]
    ExcessiveTruncation { leakage: f64, limit: f64 },

    #[error("invalid coherent state parameter: {0}")]
    InvalidCoherentState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("integration unstable at t = {time}: trace drift {drift:e}, reduce the time step")]
    StepInstability { time: f64, drift: f64 },

    #[error("invalid evolution request: {0}")]
    InvalidSchedule(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("no {sign} extremum found for probe `{probe}`")]
    PeakNotFound { probe: String, sign: &'static str },

    #[error("insufficient data: {got} points, at least {need} required")]
    InsufficientData { got: usize, need: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("fit diverged after {iterations} iterations")]
    FitDiverged { iterations: usize },

    #[error("{0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
