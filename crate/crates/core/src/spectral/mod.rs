//! Torus discretization, Fourier transforms, heat semigroup, differential
//! operators and the norms used by the estimate monitors.

mod fft;
mod field;
mod grid;
mod norms;
mod ops;

pub use fft::max_imaginary;
pub use field::Field;
pub use grid::{TorusGrid, WaveIndex};
pub use norms::{linf_norm, lp_norm, pairwise_sum, pointwise_magnitude, sobolev_norm, spectral_l2_norm};
pub use ops::{
    antigradient, curl, dealias, divergence, gradient, heat_semigroup_apply, jacobian, nonlinearity,
    partial, Dealias,
};

pub use rustfft::num_complex::Complex64;

#[derive(Debug, thiserror::Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("{op} is not defined in dimension {dim}")]
    UnsupportedDimension { op: &'static str, dim: usize },
}

/// `(1 - e^{-λ dt}) / λ`, continuous at `λ = 0` where it equals `dt`.
pub fn phi1(lambda: f64, dt: f64) -> f64 {
    let x = lambda * dt;
    if x.abs() < 1e-8 {
        dt * (1.0 - 0.5 * x + x * x / 6.0)
    } else {
        -(-x).exp_m1() / lambda
    }
}

/// `(1 - e^{-2λ dt}) / (2λ)`, the variance of an OU increment per unit noise;
/// equals `dt` at `λ = 0`.
pub fn ou_variance_factor(lambda: f64, dt: f64) -> f64 {
    phi1(2.0 * lambda, dt)
}
