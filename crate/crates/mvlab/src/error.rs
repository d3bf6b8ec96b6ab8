//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MvError {
    #[error("position vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("argument {0} outside the overflow-safe range |y| <= {1}")]
    OverflowRange(f64, f64),

    #[error("nonpositive density value {value} encountered at grid index {index}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("time step {dt} violates the stability bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("density lost positivity at t = {time} (min value {min_value})")]
    PositivityViolation { time: f64, min_value: f64 },

    #[error("spectral instability (mode blow-up) at t = {time}")]
    Instability { time: f64 },

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations \
         (final residual {residual:.3e}); parameters may be close to a critical temperature"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Metropolis acceptance rate {rate:.3} outside [0.1, 0.95] after step tuning")]
    AcceptanceOutOfRange { rate: f64 },

    #[error("no negative root a* exists at these parameters (beta <= beta_c)")]
    NoNegativeRoot,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MvError>;
