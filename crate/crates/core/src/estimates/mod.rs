//! A priori bounds evaluated along trajectories: the torus energy bound,
//! the whole-space formula on torus data, the pointwise bound on `v`, the
//! bounded-vorticity bound and the discrete `L^p` energy balance.

mod bounds;
mod dissipation;
mod monitor;

pub use bounds::{
    rd_apriori_rhs, rd_rhs, ratio, sup_norm_rhs, torus_apriori_rhs, torus_rhs, ZSummary,
};
pub use dissipation::{dissipation_residual, DissipationResidual};
pub use monitor::{bkm_monitor, calibrate_torus_constant, BkmReport, EstimateConstants, EstimateReport};

use crate::solver::SolverError;
use crate::spectral::SpectralError;

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("the whole-space bound divides by the viscosity, which is zero")]
    ZeroViscosity,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}
