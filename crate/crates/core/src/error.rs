use thiserror::Error;

/// Errors raised by the spectral, sampling and flow layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("the zero lattice mode carries no coefficient (fields are mean zero)")]
    ZeroMode,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("delta = 0 is rejected by the dynamics (the nonlinearity is not controlled at delta = 0)")]
    ZeroDelta,

    #[error("state is not Hermitian (defect {defect:.3e}); the flow only evolves real fields")]
    NotHermitian { defect: f64 },

    #[error("field has support at max-norm {radius}, outside the box of radius {cutoff}")]
    SupportOutsideBox { radius: u32, cutoff: u32 },

    #[error(
        "implicit midpoint fixed point did not converge at t = {time} after {iterations} iterations \
         (update {update:.3e}); try a smaller dt"
    )]
    NonConvergence { time: f64, iterations: usize, update: f64 },

    #[error("transform grid {grid} is too small for alias-free products at cutoff {cutoff} (need >= {required})")]
    GridTooSmall { grid: usize, cutoff: u32, required: usize },

    #[error("sample of size {size} is too small (need at least {required})")]
    SampleTooSmall { size: usize, required: usize },

    #[error("ensemble invalid: {failures} of {members} members failed to integrate")]
    EnsembleInvalid { failures: usize, members: usize },

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
