use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("Hamiltonian term is not Hermitian (max |H - H^dagger| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("integrator step size underflow at t = {time}")]
    StepSizeUnderflow { time: f64 },

    #[error("integrator exceeded {steps} steps at t = {time}")]
    TooManySteps { steps: usize, time: f64 },

    #[error("tolerance {0:e} outside [1e-12, 1e-4]")]
    InvalidTolerance(f64),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("division by zero in {0}")]
    DivisionByZero(&'static str),

    #[error("atomic data: {0}")]
    AtomicData(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { field: field.into(), reason: reason.into() }
    }

    /// Numerical failures are distinguished from input errors at the CLI boundary.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFinite(_)
                | Error::StepSizeUnderflow { .. }
                | Error::TooManySteps { .. }
                | Error::DivisionByZero(_)
        )
    }
}
