use crate::solver::Trajectory;

use super::bounds::{ratio, rd_rhs, sup_norm_rhs, torus_rhs, ZSummary};
use super::{dissipation_residual, DissipationResidual, EstimateError};

/// Constants multiplying the bounds. The theorems only assert that some
/// constant exists, so the defaults are 1 and [`calibrate_torus_constant`]
/// fits one from an ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateConstants {
    pub torus: f64,
    pub rd: f64,
    pub bkm: f64,
}

impl Default for EstimateConstants {
    fn default() -> Self {
        Self {
            torus: 1.0,
            rd: 1.0,
            bkm: 1.0,
        }
    }
}

/// Pathwise estimate quantities along one trajectory.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub constants: EstimateConstants,
    pub p: f64,
    pub times: Vec<f64>,
    /// `|u(t)|_p^p`
    pub lhs: Vec<f64>,
    pub rhs_torus: Vec<f64>,
    /// Whole-space formula on the same data; a diagnostic only.
    pub rhs_rd: Vec<f64>,
    pub ratio_torus: Vec<f64>,
    pub ratio_rd: Vec<f64>,
    /// `|v(t)|_∞`
    pub lhs_sup: Vec<f64>,
    /// Pointwise bound on `v` from the torus argument.
    pub rhs_sup: Vec<f64>,
    pub curl_inf: Vec<f64>,
    pub div_inf: Vec<f64>,
    /// Present when every step was kept as a snapshot.
    pub residual: Option<DissipationResidual>,
}

impl EstimateReport {
    pub fn from_trajectory(traj: &Trajectory, constants: EstimateConstants) -> Result<Self, EstimateError> {
        let recs = &traj.records;
        if recs.is_empty() {
            return Err(EstimateError::InvalidArgument("trajectory has no records".into()));
        }
        let p = traj.config.p;
        let nu = traj.config.nu;
        let u0_lp = recs[0].lp_u;
        let v0_sob1 = recs[0].sob1_u;
        let summaries = ZSummary::series(&traj.z_norms());
        let n = recs.len();
        let mut out = Self {
            constants,
            p,
            times: Vec::with_capacity(n),
            lhs: Vec::with_capacity(n),
            rhs_torus: Vec::with_capacity(n),
            rhs_rd: Vec::with_capacity(n),
            ratio_torus: Vec::with_capacity(n),
            ratio_rd: Vec::with_capacity(n),
            lhs_sup: Vec::with_capacity(n),
            rhs_sup: Vec::with_capacity(n),
            curl_inf: Vec::with_capacity(n),
            div_inf: Vec::with_capacity(n),
            residual: None,
        };
        for (r, z) in recs.iter().zip(&summaries) {
            let lhs = r.lp_u.powf(p);
            let torus = torus_rhs(u0_lp, z, p, constants.torus);
            let rd = rd_rhs(u0_lp, z, p, nu, constants.rd)?;
            let sup = sup_norm_rhs(v0_sob1, z);
            out.times.push(r.t);
            out.lhs.push(lhs);
            out.rhs_torus.push(torus);
            out.rhs_rd.push(rd);
            out.ratio_torus.push(ratio(lhs, torus));
            out.ratio_rd.push(ratio(lhs, rd));
            out.lhs_sup.push(r.linf_v);
            out.rhs_sup.push(sup);
            out.curl_inf.push(r.curl_inf);
            out.div_inf.push(r.div_inf);
        }
        if traj.config.snapshot_every == 1 && traj.snapshots.len() >= 2 {
            out.residual = Some(dissipation_residual(traj)?);
        }
        Ok(out)
    }

    pub fn max_ratio_torus(&self) -> f64 {
        self.ratio_torus.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_ratio_sup(&self) -> f64 {
        self.lhs_sup
            .iter()
            .zip(&self.rhs_sup)
            .map(|(l, r)| ratio(*l, *r))
            .fold(0.0, f64::max)
    }

    /// Torus ratios recomputed with constant `c`.
    pub fn ratio_torus_with(&self, c: f64) -> Vec<f64> {
        let scale = c / self.constants.torus;
        self.lhs
            .iter()
            .zip(&self.rhs_torus)
            .map(|(l, r)| ratio(*l, r * scale))
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        [&self.lhs, &self.rhs_torus, &self.ratio_torus, &self.curl_inf, &self.div_inf]
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Smallest `C` with `|u(t)|_p^p <= C (…)` at every time of every report.
pub fn calibrate_torus_constant(reports: &[EstimateReport]) -> Result<f64, EstimateError> {
    if reports.is_empty() {
        return Err(EstimateError::InvalidArgument("calibration needs at least one report".into()));
    }
    let mut c: f64 = 0.0;
    for rep in reports {
        for (l, r) in rep.lhs.iter().zip(&rep.rhs_torus) {
            let unit = r / rep.constants.torus;
            if *l == 0.0 {
                continue;
            }
            if !(unit > 0.0) || !unit.is_finite() || !l.is_finite() {
                return Err(EstimateError::InvalidArgument(format!(
                    "cannot calibrate against lhs = {l}, rhs = {unit}"
                )));
            }
            c = c.max(l / unit);
        }
    }
    Ok(c)
}

/// Vorticity monitor and the bounded-vorticity bound.
#[derive(Debug, Clone)]
pub struct BkmReport {
    pub t0: f64,
    /// `sup_t |curl u|_∞`; identically 0 in one dimension.
    pub sup_curl: f64,
    pub curl_defined: bool,
    /// `|div u(t0)|_∞`
    pub div_t0: f64,
    /// Times `t >= t0` and the bound at each.
    pub times: Vec<f64>,
    pub bound: Vec<f64>,
}

impl BkmReport {
    pub fn final_bound(&self) -> f64 {
        self.bound.last().copied().unwrap_or(f64::NAN)
    }

    pub fn is_finite(&self) -> bool {
        self.sup_curl.is_finite() && self.bound.iter().all(|b| b.is_finite())
    }
}

/// Evaluates, for `t >= t0`,
///
/// `C (|u0|^p + ∫|F(z)|_p) exp{C (t - t0) (|div u(t0)|_∞ + sup|curl u|_∞
///   + sup|z|^2_{H^{3,p}} (1 + |u0|_p + sup|z|^2_{H^{2,p}}) e^{t sup|z|_{H^{2,p}}})}`.
///
/// `t0` is snapped to the first recorded time at or after it.
pub fn bkm_monitor(traj: &Trajectory, t0: f64, c: f64) -> Result<BkmReport, EstimateError> {
    let recs = &traj.records;
    let (first, last) = match (recs.first(), recs.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => return Err(EstimateError::InvalidArgument("trajectory has no records".into())),
    };
    let tol = 1e-9 * last.abs().max(1.0);
    if !(t0 >= first - tol && t0 <= last + tol) {
        return Err(EstimateError::InvalidArgument(format!(
            "t0 = {t0} outside the recorded range [{first}, {last}]"
        )));
    }
    let i0 = recs.iter().position(|r| r.t >= t0 - tol).expect("t0 within range");
    let p = traj.config.p;
    let u0_lp = recs[0].lp_u;
    let div_t0 = recs[i0].div_inf;
    let summaries = ZSummary::series(&traj.z_norms());
    let mut sup_curl: f64 = 0.0;
    let mut times = Vec::new();
    let mut bound = Vec::new();
    for (i, (r, z)) in recs.iter().zip(&summaries).enumerate() {
        sup_curl = sup_curl.max(r.curl_inf);
        if i < i0 {
            continue;
        }
        let zterm = z.sup_sob3.powi(2) * (1.0 + u0_lp + z.sup_sob2.powi(2)) * (r.t * z.sup_sob2).exp();
        let rate = c * (r.t - recs[i0].t) * (div_t0 + sup_curl + zterm);
        times.push(r.t);
        bound.push(c * (u0_lp.powf(p) + z.int_advection) * rate.exp());
    }
    Ok(BkmReport {
        t0: recs[i0].t,
        sup_curl,
        curl_defined: traj.grid().dim() > 1,
        div_t0,
        times,
        bound,
    })
}
