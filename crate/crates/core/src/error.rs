use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("deformation value |f({n})| = {value:e} exceeds the magnitude limit")]
    MagnitudeOverflow { n: u64, value: f64 },

    #[error("invalid deformation: {0}")]
    InvalidDeformation(String),

    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("truncation level {required} exceeds the cap {cap}")]
    TruncationTooLarge { required: usize, cap: usize },

    #[error("moment order (p={p}, q={q}) exceeds the supported maximum of 4")]
    IndexOrderTooHigh { p: usize, q: usize },

    #[error("photon number {n} is outside the truncated range [0, {levels})")]
    OutOfRange { n: usize, levels: usize },

    #[error("mean photon number {mean:e} is too small for the Mandel parameter")]
    VacuumState { mean: f64 },

    #[error("diagonal moment has imaginary part {im:e}")]
    ComplexDiagonal { im: f64 },

    #[error("Fock index {order} exceeds the supported maximum")]
    OrderOverflow { order: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid of {points} points exceeds the limit")]
    GridTooLarge { points: usize },

    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),

    #[error("step too large for manifold {n}: dt * rate = {rate_dt:e}")]
    StepTooLarge { n: usize, rate_dt: f64 },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    /// Short machine-readable tag, used for the status column of sweep tables.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MagnitudeOverflow { .. } => "magnitude_overflow",
            Error::InvalidDeformation(_) => "invalid_deformation",
            Error::InvalidParams(_) => "invalid_params",
            Error::TruncationTooLarge { .. } => "truncation_too_large",
            Error::IndexOrderTooHigh { .. } => "index_order_too_high",
            Error::OutOfRange { .. } => "out_of_range",
            Error::VacuumState { .. } => "vacuum_state",
            Error::ComplexDiagonal { .. } => "complex_diagonal",
            Error::OrderOverflow { .. } => "order_overflow",
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridTooLarge { .. } => "grid_too_large",
            Error::InvalidSettings(_) => "invalid_settings",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::InvalidSweep(_) => "invalid_sweep",
            Error::InvalidState(_) => "invalid_state",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
