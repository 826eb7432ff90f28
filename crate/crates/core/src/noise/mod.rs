//! Finite-rank smooth additive noise and the Ornstein–Uhlenbeck stochastic
//! convolution it drives.

mod operator;
mod ou;
mod rng;

pub use operator::{DrivenMode, NoiseOperator, NoiseSpec};
pub use ou::{holder_exponent_estimate, ou_path, ou_step, step_count, OUPath, OUState, OuStepper, ZNorms};
pub(crate) use ou::least_squares_slope;
pub use rng::{Purpose, RngStream};

use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum NoiseError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}
