//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("wavenumber k must be nonzero (the k = 0 channel is handled by zero_mode)")]
    ZeroWavenumber,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(
        "inadmissible weight parameters: need max(2/(beta(beta^2-1)), 4/beta) < delta_beta <= 1 \
         and beta > 2, got beta={beta}, delta_beta={delta_beta}"
    )]
    InadmissibleWeight { beta: f64, delta_beta: f64 },
    #[error("step size underflow at t={t} (h={h}); the system is too stiff for this integrator")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("Picard iteration requires a homogeneous system (forcing must be identically zero)")]
    ForcedPicard,
    #[error("mode (k={k}, j={j}) is off the grid")]
    OffGridMode { k: i64, j: i64 },
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("generic perturbation failed: {0}")]
    PerturbationFailed(String),
    #[error("sweep has {size} points, exceeding the cap of {cap}")]
    SweepTooLarge { size: usize, cap: usize },
    #[error("fit window [{lo}, {hi}] contains {n} samples, need at least 20")]
    FitWindowTooSmall { lo: f64, hi: f64, n: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
