mod common;

use common::{hopf_cole_error, rel_l2, run_deterministic};
use sburgers::solver::{etd1_step, picard_window, Scheme, SolverConfig, Status};
use sburgers::spectral::{lp_norm, spectral_l2_norm, Field, TorusGrid};

fn sine(n: usize, amp: f64) -> Field {
    Field::scalar_fn(TorusGrid::standard(1, n).unwrap(), move |x| amp * x[0].sin())
}

#[test]
fn picard_matches_hopf_cole_at_64_points() {
    let err = hopf_cole_error(1, 64, 0.1, 0.5, 1e-3, Scheme::Picard);
    assert!(err <= 1e-6, "relative error {err:.3e}");
}

#[test]
fn etd1_is_first_order_in_time() {
    let u0 = sine(128, -1.0);
    let finals: Vec<Field> = [4e-3, 2e-3, 1e-3, 5e-4]
        .iter()
        .map(|&dt| {
            let cfg = SolverConfig { nu: 0.1, sign: -1.0, dt, t_final: 0.5, snapshot_every: 0, ..SolverConfig::default() };
            run_deterministic(&u0, &cfg).final_u()
        })
        .collect();
    let diffs: Vec<f64> = finals.windows(2).map(|w| spectral_l2_norm(&w[0].sub(&w[1]).unwrap())).collect();
    for w in diffs.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((0.8..=1.2).contains(&slope), "slope {slope}");
    }
}

#[test]
fn doubling_resolution_changes_little() {
    let run = |n: usize| {
        let cfg = SolverConfig { nu: 0.1, sign: -1.0, dt: 1e-3, t_final: 0.5, snapshot_every: 0, ..SolverConfig::default() };
        run_deterministic(&sine(n, -1.0), &cfg).final_u()
    };
    let coarse = run(64);
    let fine = run(128);
    // compare on the coarse grid points, every other fine point
    let sampled: Vec<f64> = fine.physical().iter().step_by(2).copied().collect();
    let fine_on_coarse = Field::from_physical(*coarse.grid(), 1, sampled).unwrap();
    let err = rel_l2(&coarse, &fine_on_coarse);
    assert!(err <= 1e-8, "relative change {err:.3e}");
}

#[test]
fn translation_commutes_with_the_flow() {
    let g = TorusGrid::standard(2, 32).unwrap();
    let u0 = Field::from_fn(g, 2, |x, j| (x[0] + 2.0 * x[1]).sin() + 0.5 * x[1 - j].cos());
    let cfg = SolverConfig { nu: 0.1, p: 3.0, dt: 1e-3, t_final: 0.1, snapshot_every: 0, ..SolverConfig::default() };
    let shift = [5, 11, 0];
    let a = run_deterministic(&u0, &cfg).final_u().roll(shift);
    let b = run_deterministic(&u0.roll(shift), &cfg).final_u();
    let diff = a.sub(&b).unwrap().max_abs();
    assert!(diff <= 1e-10, "{diff:.3e}");
}

#[test]
fn mean_is_conserved_without_forcing_or_noise() {
    let g = TorusGrid::standard(1, 64).unwrap();
    let u0 = Field::scalar_fn(g, |x| 0.7 + x[0].sin() + 0.3 * (2.0 * x[0]).cos());
    let cfg = SolverConfig { nu: 0.05, sign: -1.0, dt: 1e-3, t_final: 0.5, snapshot_every: 0, ..SolverConfig::default() };
    let u = run_deterministic(&u0, &cfg).final_u();
    assert!((u.mean()[0] - 0.7).abs() <= 1e-12, "{}", u.mean()[0]);
}

#[test]
fn lp_norm_never_increases_through_the_shock() {
    let cfg = SolverConfig { nu: 0.01, sign: -1.0, dt: 1e-3, t_final: 2.0, ..SolverConfig::default() };
    let traj = run_deterministic(&sine(256, 1.0), &cfg);
    assert!(traj.status.is_completed());
    for w in traj.records.windows(2) {
        assert!(w[1].lp_u <= w[0].lp_u + 1e-8, "t = {}: {} -> {}", w[1].t, w[0].lp_u, w[1].lp_u);
    }
}

#[test]
fn infinite_threshold_never_triggers() {
    let run = |b: f64| {
        let cfg = SolverConfig {
            nu: 0.05,
            dt: 1e-3,
            t_final: 0.5,
            blowup_threshold: Some(b),
            snapshot_every: 0,
            ..SolverConfig::default()
        };
        run_deterministic(&sine(64, 2.0), &cfg).status
    };
    assert!(matches!(run(1.0), Status::BlowUp { .. }));
    assert!(run(f64::INFINITY).is_completed());
}

#[test]
fn huge_data_blows_up_sooner_when_larger() {
    let stop = |amp: f64| {
        let cfg = SolverConfig { nu: 1e-3, dt: 1e-3, t_final: 1.0, snapshot_every: 0, ..SolverConfig::default() };
        match run_deterministic(&sine(64, amp), &cfg).status {
            Status::BlowUp { last_valid, .. } => last_valid,
            other => panic!("amplitude {amp}: {other:?}"),
        }
    };
    let times: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&a| stop(a)).collect();
    assert!(times.windows(2).all(|w| w[1] < w[0]), "{times:?}");
}

#[test]
fn gradient_data_stays_below_thousandfold_threshold() {
    let g = TorusGrid::standard(1, 128).unwrap();
    let u0 = Field::scalar_fn(g, |x| -x[0].sin());
    let b = 1e3 * lp_norm(&u0, 2.0).unwrap();
    let cfg = SolverConfig { nu: 0.1, sign: -1.0, dt: 1e-3, t_final: 1.0, blowup_threshold: Some(b), snapshot_every: 0, ..SolverConfig::default() };
    assert!(run_deterministic(&u0, &cfg).status.is_completed());
}

#[test]
fn picard_window_agrees_with_composed_etd1() {
    let g = TorusGrid::standard(1, 64).unwrap();
    let v0 = Field::scalar_fn(g, |x| -x[0].sin());
    let cfg = SolverConfig { nu: 0.05, sign: -1.0, dt: 1e-4, t_final: 0.1, ..SolverConfig::default() };
    let nodes = 1001;
    let zero = Field::zeros(g, 1);
    let window = picard_window(&v0, &vec![zero.clone(); nodes], &cfg).unwrap();
    let mut v = v0;
    for i in 0..nodes - 1 {
        v = etd1_step(&v, &zero, &cfg, i as f64 * cfg.dt).unwrap();
    }
    let diff = spectral_l2_norm(&window.nodes[nodes - 1].sub(&v).unwrap());
    assert!(diff <= 1e-5, "{diff:.3e}");
}

#[test]
fn tiny_data_converges_in_few_iterations() {
    let cfg = SolverConfig { scheme: Scheme::Picard, dt: 1e-3, t_final: 0.1, ..SolverConfig::default() };
    let traj = run_deterministic(&sine(64, 1e-6), &cfg);
    assert!(traj.status.is_completed());
    assert!(traj.max_picard_iters() <= 3, "{}", traj.max_picard_iters());
}
