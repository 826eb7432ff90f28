//! Time steppers for `v = u - z`: `v' = νΔv + s (v+z)·∇(v+z)`.

use crate::spectral::{lp_norm, nonlinearity, phi1, Complex64, Field, TorusGrid};

use super::{SolverConfig, SolverError};

/// `ν|k|^2` for every bin.
pub(crate) fn symbols(grid: &TorusGrid, nu: f64) -> Vec<f64> {
    (0..grid.len()).map(|flat| nu * grid.wave_index(flat).k2).collect()
}

/// `s·F(v + z)`, or zero when the advection term is switched off.
pub fn advection(v: &Field, z: &Field, cfg: &SolverConfig) -> Result<Field, SolverError> {
    if cfg.linear_only {
        return Ok(Field::zeros(*v.grid(), v.components()));
    }
    let u = v.add(z)?;
    Ok(nonlinearity(&u, cfg.sign, cfg.dealias)?)
}

/// One exponential-Euler step of length `cfg.dt`:
/// `v'_k = e^{-λ dt} v_k + φ(λ, dt) [s F(v+z)]_k` with `λ = ν|k|^2`.
pub fn etd1_step(v: &Field, z: &Field, cfg: &SolverConfig, t: f64) -> Result<Field, SolverError> {
    v.check_compatible(z)?;
    let grid = *v.grid();
    let total = grid.len();
    let forcing = advection(v, z, cfg)?;
    let lam = symbols(&grid, cfg.nu);
    let decay: Vec<f64> = lam.iter().map(|l| (-l * cfg.dt).exp()).collect();
    let weight: Vec<f64> = lam.iter().map(|&l| phi1(l, cfg.dt)).collect();
    let vs = v.spectral();
    let ns = forcing.spectral();
    let mut out = Vec::with_capacity(vs.len());
    for (vb, nb) in vs.chunks_exact(total).zip(ns.chunks_exact(total)) {
        for flat in 0..total {
            out.push(vb[flat] * decay[flat] + nb[flat] * weight[flat]);
        }
    }
    if out.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(SolverError::NumericalOverflow { t: t + cfg.dt });
    }
    Ok(Field::from_spectral(grid, v.components(), out)?)
}

/// Result of a converged Picard window.
#[derive(Debug, Clone)]
pub struct PicardWindow {
    /// `v` at every node, starting with `v0`.
    pub nodes: Vec<Field>,
    pub iterations: usize,
}

/// Solves the mild equation on one window by fixed-point iteration:
///
/// `v(τ_m) = S_{τ_m - t} v0 + ∫_t^{τ_m} S_{τ_m - σ} [s F(v + z)](σ) dσ`
///
/// with the integral taken by the trapezoidal rule on the nodes
/// `τ_i = t + i·cfg.dt`, where `z[i]` is the noise at node `i`. Iterates
/// until the sup over nodes of `|v^{(m+1)} - v^{(m)}|_{L^p}` drops below
/// `cfg.picard_tol`.
pub fn picard_window(v0: &Field, z: &[Field], cfg: &SolverConfig) -> Result<PicardWindow, SolverError> {
    if z.len() < 2 {
        return Err(SolverError::InvalidConfig(
            "a Picard window needs at least two nodes".into(),
        ));
    }
    for zi in z {
        v0.check_compatible(zi)?;
    }
    let grid = *v0.grid();
    let total = grid.len();
    let comps = v0.components();
    let h = cfg.dt;
    let lam = symbols(&grid, cfg.nu);
    let decay: Vec<f64> = lam.iter().map(|l| (-l * h).exp()).collect();
    let nodes = z.len();

    // linear part S_{ih} v0
    let mut linear: Vec<Vec<Complex64>> = Vec::with_capacity(nodes);
    linear.push(v0.spectral().to_vec());
    for i in 1..nodes {
        let prev = &linear[i - 1];
        let next = prev
            .iter()
            .enumerate()
            .map(|(idx, c)| c * decay[idx % total])
            .collect();
        linear.push(next);
    }

    let mut current: Vec<Field> = linear
        .iter()
        .map(|c| Field::from_spectral(grid, comps, c.clone()).expect("same shape"))
        .collect();
    let n0 = advection(v0, &z[0], cfg)?;

    for iteration in 1..=cfg.picard_max_iter {
        let mut integral = vec![Complex64::new(0.0, 0.0); comps * total];
        let mut prev_n = n0.spectral().to_vec();
        let mut next = Vec::with_capacity(nodes);
        next.push(v0.clone());
        for i in 1..nodes {
            let ni = advection(&current[i], &z[i], cfg)?;
            let ns = ni.spectral();
            for (idx, slot) in integral.iter_mut().enumerate() {
                *slot = (*slot + prev_n[idx] * (0.5 * h)) * decay[idx % total] + ns[idx] * (0.5 * h);
            }
            let vi: Vec<Complex64> = linear[i].iter().zip(&integral).map(|(a, b)| a + b).collect();
            if vi.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(SolverError::PicardFailure { iterations: iteration });
            }
            next.push(Field::from_spectral(grid, comps, vi)?);
            prev_n = ns.to_vec();
        }
        let mut change: f64 = 0.0;
        for (a, b) in next.iter().zip(&current).skip(1) {
            change = change.max(lp_norm(&a.lin_comb(1.0, b, -1.0)?, cfg.p)?);
        }
        current = next;
        if !change.is_finite() {
            return Err(SolverError::PicardFailure { iterations: iteration });
        }
        if change <= cfg.picard_tol {
            return Ok(PicardWindow {
                nodes: current,
                iterations: iteration,
            });
        }
    }
    Err(SolverError::PicardFailure {
        iterations: cfg.picard_max_iter,
    })
}

/// Initial local-existence window, in steps: `min(100 dt, c / (1 + |u|_p^2))`.
pub fn window_steps(u_lp: f64, cfg: &SolverConfig) -> usize {
    let delta = (100.0 * cfg.dt).min(cfg.window_constant / (1.0 + u_lp * u_lp));
    ((delta / cfg.dt).floor() as usize).max(1)
}
