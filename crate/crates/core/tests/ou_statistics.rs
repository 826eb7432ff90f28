mod common;

use std::time::Instant;

use common::{ou_mode_moments, ou_variance};
use sburgers::noise::{holder_exponent_estimate, ou_path, NoiseOperator, NoiseSpec, RngStream};
use sburgers::spectral::{max_imaginary, Dealias, TorusGrid};

fn smooth_noise(n: usize, cutoff: usize) -> NoiseOperator {
    let grid = TorusGrid::standard(1, n).unwrap();
    NoiseOperator::build(grid, NoiseSpec { amplitude: 1.0, decay: 3.0, cutoff, ..NoiseSpec::default() }).unwrap()
}

fn sigma(k: i64) -> f64 {
    (1.0 + (k * k) as f64).powf(-1.5)
}

#[test]
fn mean_squared_l2_norm_matches_mode_sum() {
    let start = Instant::now();
    let noise = smooth_noise(32, 8);
    let m = ou_mode_moments(&noise, 1.0, 1.0, 1e-3, 11, 10_000);
    let expected: f64 = 2.0 * std::f64::consts::PI * (-8..=8i64).map(|k| ou_variance(sigma(k), (k * k) as f64, 1.0)).sum::<f64>();
    let n = m.l2_sq.len() as f64;
    let mean = m.l2_sq.iter().sum::<f64>() / n;
    let var = m.l2_sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    println!("E|z(1)|^2 = {mean:.5} ± {se:.5}, expected {expected:.5} ({:.1?})", start.elapsed());
    assert!((mean - expected).abs() <= 3.0 * se);
}

#[test]
fn brownian_mean_mode_has_variance_t() {
    // only the k = 0 mode: z_0(t) is a Brownian motion
    let noise = smooth_noise(16, 0);
    for t in [0.25, 1.0] {
        let m = ou_mode_moments(&noise, 1.0, t, 1e-2, 3, 10_000);
        assert_eq!(m.k, vec![0]);
        assert!((m.mean[0] - t).abs() <= 3.0 * m.std_error[0], "t={t}: {} ± {}", m.mean[0], m.std_error[0]);
    }
}

#[test]
fn stationary_variance_is_reached() {
    // ν|k|^2 = 1 over T = 5: within e^{-10} of σ^2/(2ν|k|^2)
    let noise = smooth_noise(16, 1);
    let m = ou_mode_moments(&noise, 1.0, 5.0, 1e-2, 5, 10_000);
    let i = m.k.iter().position(|&k| k == 1).unwrap();
    let target = sigma(1).powi(2) / 2.0;
    assert!((m.mean[i] - target).abs() <= 3.0 * m.std_error[i]);
}

#[test]
fn paths_are_real_at_every_time() {
    let grid = TorusGrid::standard(2, 32).unwrap();
    let noise = NoiseOperator::build(grid, NoiseSpec { amplitude: 1.0, decay: 2.0, cutoff: 5, ..NoiseSpec::default() }).unwrap();
    let path = ou_path(0.2, 1e-2, 0.5, None, &noise, RngStream::noise(8, 0), 3.0, Dealias::TwoThirds).unwrap();
    for s in path.states() {
        let scale = s.z.max_abs().max(1e-300);
        assert!(max_imaginary(&grid, s.z.spectral()) <= 1e-10 * scale);
    }
}

#[test]
fn holder_exponent_is_near_one_half_at_two_step_sizes() {
    let noise = smooth_noise(32, 8);
    for dt in [1e-3, 5e-4] {
        let mut exps = Vec::new();
        for s in 0..10 {
            let path = ou_path(1.0, dt, 1.0, None, &noise, RngStream::noise(21, s), 2.0, Dealias::TwoThirds).unwrap();
            exps.push(holder_exponent_estimate(&path, 0, 2.0).unwrap());
        }
        let mean = exps.iter().sum::<f64>() / exps.len() as f64;
        println!("dt={dt}: Hölder exponents {exps:.3?}, mean {mean:.3}");
        assert!((0.4..=0.6).contains(&mean), "dt={dt}: {mean}");
    }
}
