use crate::noise::ZNorms;
use crate::spectral::{curl, divergence, linf_norm, lp_norm, nonlinearity, sobolev_norm, Field, TorusGrid};

use super::{SolverConfig, SolverError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Status {
    Completed,
    /// `|u|_{L^p}` crossed the threshold (or became non-finite) at `detected`;
    /// `last_valid` is the empirical lower bound for the maximal time.
    BlowUp { last_valid: f64, detected: f64 },
    /// Picard contraction failed on every admissible window starting at `t`.
    PicardFailure { t: f64 },
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Completed => "completed",
            Status::BlowUp { .. } => "blow_up",
            Status::PicardFailure { .. } => "picard_failure",
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, Status::Completed)
    }

    /// Time at which integration stopped early, if it did.
    pub fn stop_time(&self) -> Option<f64> {
        match *self {
            Status::Completed => None,
            Status::BlowUp { last_valid, .. } => Some(last_valid),
            Status::PicardFailure { t } => Some(t),
        }
    }
}

/// Scalar diagnostics of `u = v + z` at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub lp_u: f64,
    pub sob1_u: f64,
    pub lp_v: f64,
    pub linf_v: f64,
    pub curl_inf: f64,
    pub div_inf: f64,
    /// `|(u·∇)u|_{L^p}`
    pub advection_lp: f64,
    pub picard_iters: usize,
    pub z: ZNorms,
}

impl StepRecord {
    pub fn measure(
        t: f64,
        v: &Field,
        z: &Field,
        cfg: &SolverConfig,
        picard_iters: usize,
    ) -> Result<Self, SolverError> {
        let u = v.add(z)?;
        let d = u.grid().dim();
        let curl_inf = if d == 1 { 0.0 } else { linf_norm(&curl(&u)?) };
        Ok(Self {
            t,
            lp_u: lp_norm(&u, cfg.p)?,
            sob1_u: sobolev_norm(&u, 1, cfg.p)?,
            lp_v: lp_norm(v, cfg.p)?,
            linf_v: linf_norm(v),
            curl_inf,
            div_inf: linf_norm(&divergence(&u)?),
            advection_lp: lp_norm(&nonlinearity(&u, 1.0, cfg.dealias)?, cfg.p)?,
            picard_iters,
            z: ZNorms::of(t, z, cfg.p, cfg.dealias)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub v: Field,
    pub z: Field,
}

impl Snapshot {
    pub fn u(&self) -> Field {
        self.v.add(&self.z).expect("snapshot fields share a grid")
    }
}

/// Output of [`super::solve`]: per-step diagnostics, snapshots and status.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SolverConfig,
    pub u0: Field,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<Snapshot>,
    pub status: Status,
}

impl Trajectory {
    pub fn grid(&self) -> &TorusGrid {
        self.u0.grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn u0_lp(&self) -> f64 {
        self.records.first().map_or(0.0, |r| r.lp_u)
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory keeps the initial snapshot")
    }

    pub fn final_u(&self) -> Field {
        self.final_snapshot().u()
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }

    pub fn z_norms(&self) -> Vec<ZNorms> {
        self.records.iter().map(|r| r.z).collect()
    }

    /// Step sum of `|F(u)|_{L^p} dt`, the discrete `L^1(0,T; L^p)` norm of the advection term.
    pub fn advection_l1(&self) -> f64 {
        let dt = self.config.dt;
        self.records.iter().skip(1).map(|r| r.advection_lp * dt).sum()
    }

    pub fn max_picard_iters(&self) -> usize {
        self.records.iter().map(|r| r.picard_iters).max().unwrap_or(0)
    }
}
