use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("Hilbert-space layouts differ")]
    SpecMismatch,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("unsupported Hamiltonian: {0}")]
    Unsupported(String),

    #[error("step {step:e} s exceeds the resolution limit {limit:e} s")]
    StepTooLarge { step: f64, limit: f64 },

    #[error("size {dim} exceeds the dense-storage guard {guard}")]
    DimensionGuard { dim: usize, guard: usize },

    #[error("numerical instability at t = {t:e} s: {reason}")]
    Instability { t: f64, reason: String },

    #[error("trajectory {index} reached a zero-norm state at t = {t:e} s")]
    ZeroNorm { index: usize, t: f64 },

    #[error("|f> population {population:e} exceeds tolerance {tolerance:e}")]
    FLevelPopulated { population: f64, tolerance: f64 },

    #[error("coupling strengths do not satisfy the matching condition (spread {spread:e})")]
    Unmatched { spread: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
