//! Pseudo-spectral simulation of the stochastic Burgers equation on the torus.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod estimates;
pub mod experiment;
pub mod noise;
pub mod oracle;
pub mod solver;
pub mod spectral;
