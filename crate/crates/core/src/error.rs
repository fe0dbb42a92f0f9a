use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller supplied inconsistent arguments (dimensions, grids, indices).
    #[error("usage error: {0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// The spectrum has (near-)coinciding levels; the adiabatic audit refuses to proceed.
    #[error("degenerate spectrum at t = {t}: gap {gap:e} below threshold {threshold:e}")]
    Degeneracy { t: f64, gap: f64, threshold: f64 },
    #[error("level tracking failed at grid index {index}: {reason}")]
    Tracking { index: usize, reason: String },
    #[error("gauge corruption at grid index {index}: {reason}")]
    Gauge { index: usize, reason: String },
    /// A verification residual exceeded its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 config/usage, 2 numerical, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) | Error::Io(_) => 1,
            Error::Numerical(_)
            | Error::Degeneracy { .. }
            | Error::Tracking { .. }
            | Error::Gauge { .. } => 2,
            Error::Verification(_) => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
