use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative time {0} is not allowed")]
    NegativeTime(f64),

    #[error("empty point cloud")]
    EmptyCloud,

    #[error("dimension mismatch: expected {expected} modes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid of {grid} points cannot resolve {modes} modes")]
    Aliasing { modes: usize, grid: usize },

    #[error("finite escape or instability at t = {t}: norm {norm:e} exceeds ceiling {ceiling:e}")]
    FiniteEscape { t: f64, norm: f64, ceiling: f64 },

    #[error("no exponential decay: omega' = {omega_prime} must be below omega = {omega}")]
    NoDecay { omega: f64, omega_prime: f64 },

    #[error("sector bounds cannot hold for any kappa: {0}")]
    SectorImpossible(String),

    #[error("attractor sample left the absorbing ball: norm {norm} > radius {radius}")]
    OutsideAbsorbingBall { norm: f64, radius: f64 },

    #[error("signal parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
