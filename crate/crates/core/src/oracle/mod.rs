//! Exact machinery for potential (gradient) data: the Hopf–Cole solution of
//! the viscous Hamilton–Jacobi equation, the Hopf–Lax formula for its
//! inviscid limit, and vanishing-viscosity sweeps.

mod hopf;
mod sweep;

pub use hopf::{hj_coefficient, hopf_cole_solve, hopf_lax_solve, PotentialState};
pub use sweep::{
    expectation_estimates, fit_linear_constant, nu_sweep, ExpectationStats, SweepConfig, SweepEntry,
    SweepResult,
};

use crate::solver::SolverError;
use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Hopf–Cole transform failed: {0}")]
    OracleFailure(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
