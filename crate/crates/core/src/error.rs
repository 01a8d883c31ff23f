use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{point} is within {distance:.3e} of the spectrum")]
    Singular { point: Complex64, distance: f64 },

    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("contour |z - {center}| = {radius} passes within {gap:.3e} of eigenvalue {eigenvalue}")]
    Separation {
        center: Complex64,
        radius: f64,
        eigenvalue: Complex64,
        gap: f64,
    },

    #[error("spectral projector routes disagree by {discrepancy:.3e} (tolerance {tolerance:.1e})")]
    ProjectorMismatch { discrepancy: f64, tolerance: f64 },

    #[error("semigroup magnitude guard tripped at t = {time}")]
    MagnitudeGuard { time: f64 },

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),

    #[error("domain too small: mu(L)/mu(0) = {ratio:.3e} exceeds {limit:.1e}")]
    DomainTooSmall { ratio: f64, limit: f64 },

    #[error("assembly check failed: {0}")]
    Assembly(String),

    #[error("implicit step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("matrix market: {0}")]
    MatrixMarket(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
