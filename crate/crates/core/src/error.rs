use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coupling formula has a pole: {0}")]
    Pole(String),

    #[error("charge vector {0:?} has no states on this geometry")]
    EmptySector(Vec<i32>),

    #[error("wavefunction does not belong to the sector of this operator")]
    SectorMismatch,

    #[error("sector too large for dense lookup tables: {0}")]
    SectorTooLarge(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("Lanczos did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("propagation step rejected: local error {error:.3e} above tolerance {tolerance:.3e}")]
    StepRejected { error: f64, tolerance: f64 },

    #[error("internal consistency fault: {0}")]
    Internal(String),

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. } | Error::StepRejected { .. } | Error::Internal(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_) | Error::Json(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
