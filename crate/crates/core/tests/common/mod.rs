#![allow(dead_code)]

use sburgers::noise::{NoiseOperator, RngStream};
use sburgers::oracle::{hj_coefficient, hopf_cole_solve};
use sburgers::solver::{solve, Scheme, SolverConfig, Trajectory};
use sburgers::spectral::{gradient, spectral_l2_norm, Field, TorusGrid};

pub fn rel_l2(a: &Field, b: &Field) -> f64 {
    spectral_l2_norm(&a.sub(b).unwrap()) / spectral_l2_norm(b)
}

/// `ψ0 = Σ_j cos x_j` on the standard torus.
pub fn cos_potential(grid: TorusGrid) -> Field {
    Field::scalar_fn(grid, |x| (0..grid.dim()).map(|j| x[j].cos()).sum())
}

pub fn run_deterministic(u0: &Field, cfg: &SolverConfig) -> Trajectory {
    solve(u0, None, &NoiseOperator::zero(*u0.grid()), cfg, RngStream::noise(0, 0)).unwrap()
}

/// Burgers run from `u0 = ∇ cos` against the Hopf–Cole velocity at `t`.
/// Returns the relative L² error.
pub fn hopf_cole_error(dim: usize, n: usize, nu: f64, t: f64, dt: f64, scheme: Scheme) -> f64 {
    let grid = TorusGrid::standard(dim, n).unwrap();
    let psi0 = cos_potential(grid);
    let u0 = gradient(&psi0).unwrap();
    let cfg = SolverConfig {
        nu,
        sign: -1.0,
        p: 3.0,
        dt,
        t_final: t,
        scheme,
        snapshot_every: 0,
        ..SolverConfig::default()
    };
    let traj = run_deterministic(&u0, &cfg);
    assert!(traj.status.is_completed(), "{:?}", traj.status);
    let oracle = hopf_cole_solve(&psi0, nu, None, t, hj_coefficient(-1.0, None), dt).unwrap();
    rel_l2(&traj.final_u(), &oracle.u)
}

/// Empirical `E|ẑ_k(T)|^2` over `samples` independent paths, with standard
/// errors, for every wavenumber `|k| <= cutoff` of a 1-D scalar OU process.
pub struct ModeMoments {
    pub k: Vec<i64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    /// `|z(T)|_{L^2}^2` per sample.
    pub l2_sq: Vec<f64>,
}

pub fn ou_mode_moments(
    noise: &sburgers::noise::NoiseOperator,
    nu: f64,
    t: f64,
    dt: f64,
    seed: u64,
    samples: u64,
) -> ModeMoments {
    use rayon::prelude::*;
    use sburgers::noise::{step_count, OuStepper};

    let grid = *noise.grid();
    let cutoff = noise.spec().cutoff as i64;
    let ks: Vec<i64> = (-cutoff..=cutoff).collect();
    let steps = step_count(t, dt).unwrap();
    let rows: Vec<(Vec<f64>, f64)> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let mut stepper = OuStepper::new(dt, nu, None, noise.clone(), RngStream::noise(seed, s)).unwrap();
            for _ in 0..steps {
                stepper.advance().unwrap();
            }
            let z = &stepper.state().z;
            let c = z.spectral();
            let power = ks.iter().map(|&k| c[grid.mode_index([k, 0, 0]).unwrap()].norm_sqr()).collect();
            let l2 = sburgers::spectral::lp_norm(z, 2.0).unwrap();
            (power, l2 * l2)
        })
        .collect();
    let m = samples as f64;
    let mut mean = vec![0.0; ks.len()];
    let mut second = vec![0.0; ks.len()];
    for (power, _) in &rows {
        for (i, &x) in power.iter().enumerate() {
            mean[i] += x / m;
            second[i] += x * x / m;
        }
    }
    let std_error = mean
        .iter()
        .zip(&second)
        .map(|(mu, s2)| ((s2 - mu * mu) * m / (m - 1.0) / m).sqrt())
        .collect();
    ModeMoments {
        k: ks,
        mean,
        std_error,
        l2_sq: rows.into_iter().map(|(_, l)| l).collect(),
    }
}

/// `σ^2 (1 - e^{-2λT}) / (2λ)`, `σ^2 T` at `λ = 0`.
pub fn ou_variance(sigma: f64, lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        sigma * sigma * t
    } else {
        sigma * sigma * (1.0 - (-2.0 * lambda * t).exp()) / (2.0 * lambda)
    }
}
