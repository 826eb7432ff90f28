use rayon::prelude::*;

use crate::noise::{NoiseOperator, RngStream};
use crate::solver::{solve, SolverConfig, Status};
use crate::spectral::{antigradient, gradient, linf_norm, sobolev_norm, Field};

use super::{hj_coefficient, hopf_cole_solve, hopf_lax_solve, OracleError};

/// Inputs of a vanishing-viscosity sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Strictly decreasing viscosities, at least three.
    pub nus: Vec<f64>,
    pub psi0: Field,
    /// Deterministic forcing potential `U`; the velocity forcing is `∇U`.
    pub potential: Option<Field>,
    /// Noise on the potential; the velocity noise is its gradient.
    pub noise: Option<NoiseOperator>,
    /// Horizon, step, sign and exponent come from here; `nu` is overridden per entry.
    pub solver: SolverConfig,
    pub hj_factor: Option<f64>,
    pub stream: RngStream,
    /// Times at which `|ψ^ν(s)|_{H^{1,p}}` is sampled on the deterministic path.
    pub sup_samples: usize,
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub nu: f64,
    pub psi: Field,
    /// `sup_{s <= t} |ψ^ν(s)|^p_{H^{1,p}}`
    pub sup_h1p_pow: f64,
    /// Solver outcome; always `Completed` on the deterministic path.
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// `|ψ^{ν_i} - ψ^{ν_{i+1}}|_∞`
    pub gaps: Vec<f64>,
    /// `|ψ^{ν_i} - ψ^{HL}|_∞`, when the Hopf–Lax oracle applies.
    pub gaps_to_hopf_lax: Option<Vec<f64>>,
    pub deterministic: bool,
}

impl SweepResult {
    pub fn nus(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.nu).collect()
    }
}

fn sup_gap(a: &Field, b: &Field) -> Result<f64, OracleError> {
    Ok(linf_norm(&a.sub(b)?))
}

/// Runs the family `{ψ^ν}` over `cfg.nus`.
///
/// Without noise each `ψ^ν` comes from the Hopf–Cole solution. With noise the
/// Burgers solver runs on `u0 = ∇ψ0`, `f = ∇U`, `g = ∇V`, every `ν` drawing
/// the same Wiener increments, and `ψ^ν` is the zero-mean antigradient of
/// `u^ν`.
pub fn nu_sweep(cfg: &SweepConfig) -> Result<SweepResult, OracleError> {
    if cfg.nus.len() < 3 {
        return Err(OracleError::InvalidArgument(format!(
            "a sweep needs at least three viscosities (got {})",
            cfg.nus.len()
        )));
    }
    if cfg.nus.windows(2).any(|w| !(w[1] < w[0])) || cfg.nus.iter().any(|&n| !(n > 0.0)) {
        return Err(OracleError::InvalidArgument(
            "viscosities must be positive and strictly decreasing".into(),
        ));
    }
    let c = hj_coefficient(cfg.solver.sign, cfg.hj_factor);
    let t = cfg.solver.t_final;
    let p = cfg.solver.p;
    let deterministic = cfg.noise.as_ref().is_none_or(|n| n.is_zero());

    let entries: Vec<SweepEntry> = cfg
        .nus
        .par_iter()
        .map(|&nu| {
            if deterministic {
                deterministic_entry(cfg, nu, c, t, p)
            } else {
                stochastic_entry(cfg, nu, p)
            }
        })
        .collect::<Result<_, _>>()?;

    let gaps = entries
        .windows(2)
        .map(|w| sup_gap(&w[0].psi, &w[1].psi))
        .collect::<Result<Vec<_>, _>>()?;
    let gaps_to_hopf_lax = if deterministic && cfg.potential.is_none() {
        let hl = hopf_lax_solve(&cfg.psi0, t, c)?;
        Some(
            entries
                .iter()
                .map(|e| sup_gap(&e.psi, &hl))
                .collect::<Result<Vec<_>, _>>()?,
        )
    } else {
        None
    };
    Ok(SweepResult {
        entries,
        gaps,
        gaps_to_hopf_lax,
        deterministic,
    })
}

fn deterministic_entry(cfg: &SweepConfig, nu: f64, c: f64, t: f64, p: f64) -> Result<SweepEntry, OracleError> {
    let samples = cfg.sup_samples.max(1);
    let mut sup: f64 = sobolev_norm(&cfg.psi0, 1, p)?.powf(p);
    let mut last = None;
    for j in 1..=samples {
        let s = t * j as f64 / samples as f64;
        let state = hopf_cole_solve(&cfg.psi0, nu, cfg.potential.as_ref(), s, c, cfg.solver.dt)?;
        sup = sup.max(sobolev_norm(&state.psi, 1, p)?.powf(p));
        last = Some(state.psi);
    }
    Ok(SweepEntry {
        nu,
        psi: last.expect("at least one sample"),
        sup_h1p_pow: sup,
        status: Status::Completed,
    })
}

fn stochastic_entry(cfg: &SweepConfig, nu: f64, p: f64) -> Result<SweepEntry, OracleError> {
    let grid = *cfg.psi0.grid();
    let solver = SolverConfig {
        nu,
        ..cfg.solver.clone()
    };
    let u0 = gradient(&cfg.psi0)?;
    let forcing = cfg.potential.as_ref().map(gradient).transpose()?;
    let noise = cfg.noise.clone().unwrap_or_else(|| NoiseOperator::zero(grid));
    let traj = solve(&u0, forcing.as_ref(), &noise, &solver, cfg.stream)?;
    let mut sup: f64 = 0.0;
    for snap in &traj.snapshots {
        let psi = antigradient(&snap.u())?;
        sup = sup.max(sobolev_norm(&psi, 1, p)?.powf(p));
    }
    Ok(SweepEntry {
        nu,
        psi: antigradient(&traj.final_u())?,
        sup_h1p_pow: sup,
        status: traj.status,
    })
}

/// Smallest `K` with `gap_i <= K ν_i` over the sweep.
pub fn fit_linear_constant(nus: &[f64], gaps: &[f64]) -> f64 {
    nus.iter().zip(gaps).map(|(n, g)| g / n).fold(0.0, f64::max)
}

/// Monte-Carlo statistics of `E sup_{s<=t} |ψ^ν(s)|^p_{H^{1,p}}` per `ν`.
#[derive(Debug, Clone)]
pub struct ExpectationStats {
    pub nus: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Least-squares slope of the means against `ν`.
    pub slope: f64,
    /// Every pair of means differs by less than three combined standard
    /// errors plus `|slope| |ν_i - ν_j|`.
    pub uniform: bool,
}

pub fn expectation_estimates(sweeps: &[SweepResult]) -> Result<ExpectationStats, OracleError> {
    if sweeps.len() < 30 {
        return Err(OracleError::InvalidArgument(format!(
            "expectation estimates need at least 30 samples (got {})",
            sweeps.len()
        )));
    }
    let nus = sweeps[0].nus();
    if sweeps.iter().any(|s| s.nus() != nus) {
        return Err(OracleError::InvalidArgument("sweeps use different viscosity lists".into()));
    }
    let n = sweeps.len() as f64;
    let mut mean = Vec::with_capacity(nus.len());
    let mut std_error = Vec::with_capacity(nus.len());
    for i in 0..nus.len() {
        let xs: Vec<f64> = sweeps.iter().map(|s| s.entries[i].sup_h1p_pow).collect();
        let m = crate::spectral::pairwise_sum(&xs) / n;
        let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
        let var = crate::spectral::pairwise_sum(&dev) / (n - 1.0);
        mean.push(m);
        std_error.push((var / n).sqrt());
    }
    let points: Vec<(f64, f64)> = nus.iter().cloned().zip(mean.iter().cloned()).collect();
    let spread = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max)
        - points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let slope = if spread > 0.0 {
        crate::noise::least_squares_slope(&points)
    } else {
        0.0
    };
    let mut uniform = true;
    for i in 0..nus.len() {
        for j in i + 1..nus.len() {
            let tol = 3.0 * (std_error[i].powi(2) + std_error[j].powi(2)).sqrt() + slope.abs() * (nus[i] - nus[j]).abs();
            if (mean[i] - mean[j]).abs() > tol * (1.0 + 1e-12) + 1e-300 {
                uniform = false;
            }
        }
    }
    Ok(ExpectationStats {
        nus,
        mean,
        std_error,
        slope,
        uniform,
    })
}
