use crate::solver::{advection, Snapshot, Trajectory};
use crate::spectral::{jacobian, pairwise_sum, Field};

use super::EstimateError;

/// Discrete residual of the `L^p` energy balance of `v` between consecutive
/// steps:
///
/// `r = (|v(t)|_p^p - |v(t-dt)|_p^p)/dt + νp D + νp(p-2) D' - p∫|v|^{p-2} v·N`
///
/// with `D = ∫|v|^{p-2}|∇v|^2`, `D' = ∫|v|^{p-4} Σ_a (v·∂_a v)^2` and `N` the
/// advection term driving `v`; the last three terms are averaged over both
/// ends of the step. A positive `r` is the side on which the energy
/// inequality breaks.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationResidual {
    /// Right end of each step.
    pub times: Vec<f64>,
    pub residual: Vec<f64>,
}

impl DissipationResidual {
    /// `max_t max(r, 0)`
    pub fn max_violation(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, |a, r| a.max(r))
    }

    pub fn sup_abs(&self) -> f64 {
        self.residual.iter().cloned().fold(0.0, |a, r| a.max(r.abs()))
    }
}

struct Balance {
    energy: f64,
    /// `dE/dt` predicted by the equation.
    rate: f64,
}

fn balance(snap: &Snapshot, traj: &Trajectory) -> Result<Balance, EstimateError> {
    let cfg = &traj.config;
    let p = cfg.p;
    let v = &snap.v;
    let grid = *v.grid();
    let d = grid.dim();
    let total = grid.len();
    let jac: Field = jacobian(v)?;
    let drive = advection(v, &snap.z, cfg)?;
    let (vp, jp, np) = (v.physical(), jac.physical(), drive.physical());

    let mut energy = Vec::with_capacity(total);
    let mut diss = Vec::with_capacity(total);
    let mut diss2 = Vec::with_capacity(total);
    let mut coupling = Vec::with_capacity(total);
    for i in 0..total {
        let mag2: f64 = (0..d).map(|j| vp[j * total + i].powi(2)).sum();
        energy.push(mag2.powf(p / 2.0));
        let grad2: f64 = (0..d * d).map(|c| jp[c * total + i].powi(2)).sum();
        if mag2 == 0.0 {
            // |v|^{p-2} is 1 at zeros of v only for p = 2; below 2 the
            // singular weight is left out
            diss.push(if p == 2.0 { grad2 } else { 0.0 });
            diss2.push(0.0);
            coupling.push(0.0);
            continue;
        }
        let w = mag2.powf(p / 2.0 - 1.0);
        let proj: f64 = (0..d)
            .map(|a| {
                let s: f64 = (0..d).map(|j| vp[j * total + i] * jp[(j * d + a) * total + i]).sum();
                s * s
            })
            .sum();
        let vn: f64 = (0..d).map(|j| vp[j * total + i] * np[j * total + i]).sum();
        diss.push(w * grad2);
        diss2.push(w * proj / mag2);
        coupling.push(w * vn);
    }
    let vol = grid.cell_volume();
    let nu = cfg.nu;
    let energy = pairwise_sum(&energy) * vol;
    let rate = p * pairwise_sum(&coupling) * vol
        - nu * p * pairwise_sum(&diss) * vol
        - nu * p * (p - 2.0) * pairwise_sum(&diss2) * vol;
    Ok(Balance { energy, rate })
}

/// Needs a snapshot at every step.
pub fn dissipation_residual(traj: &Trajectory) -> Result<DissipationResidual, EstimateError> {
    let snaps = &traj.snapshots;
    if snaps.windows(2).any(|w| w[1].step != w[0].step + 1) {
        return Err(EstimateError::InvalidArgument(
            "dissipation residual needs snapshots at consecutive steps".into(),
        ));
    }
    let balances = snaps
        .iter()
        .map(|s| balance(s, traj))
        .collect::<Result<Vec<_>, _>>()?;
    let mut times = Vec::with_capacity(snaps.len().saturating_sub(1));
    let mut residual = Vec::with_capacity(times.capacity());
    for (w, b) in snaps.windows(2).zip(balances.windows(2)) {
        let h = w[1].t - w[0].t;
        times.push(w[1].t);
        residual.push((b[1].energy - b[0].energy) / h - 0.5 * (b[0].rate + b[1].rate));
    }
    Ok(DissipationResidual { times, residual })
}
