use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sburgers::experiment::{read_snapshot, RunManifest, MANIFEST_NAME};

fn sburgers(args: &[&str], dir: &Path, config: &str) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_sburgers"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("SBURGERS_THREADS")
        .output()
        .unwrap()
}

fn manifest(dir: &Path) -> RunManifest {
    RunManifest::parse(&fs::read_to_string(dir.join("out").join(MANIFEST_NAME)).unwrap()).unwrap()
}

fn error_record(out: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("an error record");
    serde_json::from_str(line).unwrap()
}

const ZERO_RUN: &str = "\
# zero data stays zero
grid.dim = 1
grid.n = 8
solver.t_final = 0.01
solver.dt = 0.001
init.kind = zero
output.snapshot_every = 5
";

#[test]
fn zero_simulation_writes_zero_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = sburgers(&["simulate"], dir.path(), ZERO_RUN);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("completed"));

    let mut rdr = csv::Reader::from_path(dir.path().join("out/diagnostics.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header[0], "t");
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        rows += 1;
        for (name, value) in header.iter().zip(rec.iter()).skip(1) {
            let x: f64 = value.parse().unwrap();
            match name.as_str() {
                "ratio_torus" => assert_eq!(x, 1.0),
                "picard_iters" => {}
                _ => assert_eq!(x, 0.0, "{name}"),
            }
        }
    }
    assert_eq!(rows, 11);

    let m = manifest(dir.path());
    assert_eq!(m.state, "complete");
    assert_eq!(m.summary_value("status"), Some("completed"));
    assert!(m.config.iter().any(|(k, v)| k == "grid.n" && v == "8"));
    for f in &m.files {
        assert!(dir.path().join("out").join(f).is_file(), "{f}");
    }
    let snaps: Vec<&String> = m.files.iter().filter(|f| f.ends_with(".sbf")).collect();
    assert_eq!(snaps.len(), 3);
    for f in snaps {
        let path = dir.path().join("out").join(f);
        assert_eq!(fs::metadata(&path).unwrap().len(), 96);
        let (field, _) = read_snapshot(&path).unwrap();
        assert!(field.physical().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn unknown_key_is_a_config_error_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = sburgers(&["simulate"], dir.path(), "grid.dim = 1\nsolver.viscosity = 0.1\n");
    assert_eq!(out.status.code(), Some(2));
    let rec = error_record(&out);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["kind"], "config");
    assert!(rec["message"].as_str().unwrap().contains("line 2"), "{rec}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn exponent_not_above_dimension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = sburgers(&["simulate"], dir.path(), "grid.dim = 2\nsolver.p = 2\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(error_record(&out)["message"].as_str().unwrap().contains("p > d"));
}

#[test]
fn sweep_without_gradient_data_fails_with_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = sburgers(&["sweep-nu"], dir.path(), "grid.n = 16\nsweep.nu = 0.2, 0.1, 0.05\n");
    assert_eq!(out.status.code(), Some(1));
    let rec = error_record(&out);
    assert_eq!(rec["status"], "error");
    assert_ne!(rec["kind"], "config");
    let m = manifest(dir.path());
    assert_eq!(m.state, "failed");
    assert!(m.summary_value("error_kind").is_some());
}

#[test]
fn blow_up_is_a_result_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
grid.n = 32
solver.nu = 0.001
solver.sign = 1
solver.t_final = 0.5
init.kind = single_mode
init.k = 1
init.amp = 1e6
";
    let out = sburgers(&["simulate"], dir.path(), cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("blow_up"));
    let m = manifest(dir.path());
    assert_eq!(m.state, "complete");
    assert_eq!(m.summary_value("status"), Some("blow_up"));
    assert!(m.summary_value("stop_t").unwrap().parse::<f64>().unwrap() < 0.5);
}

#[test]
fn inadmissible_noise_warns_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
grid.n = 16
solver.t_final = 0.01
noise.amplitude = 0.1
noise.gamma = 1
noise.cutoff = 4
noise.target_order = 2
";
    let out = sburgers(&["simulate", "--seed", "17"], dir.path(), cfg);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning: noise not admissible"));
    let m = manifest(dir.path());
    assert_eq!(m.warnings.len(), 1);
    assert!(m.config.iter().any(|(k, v)| k == "run.seed" && v == "17"));
}

#[test]
fn noisy_convergence_study_shares_one_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "\
grid.n = 64
solver.nu = 0.1
solver.sign = -1
solver.t_final = 0.2
init.kind = gradient
init.modes = 1:1.0
noise.amplitude = 0.1
noise.cutoff = 8
convergence.ns = 32, 64, 128
";
    let out = sburgers(&["convergence"], dir.path(), cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(dir.path());
    let slope: f64 = m.summary_value("dt_slope").unwrap().parse().unwrap();
    assert!((0.8..=1.2).contains(&slope), "{slope}");
    let n_slope: f64 = m.summary_value("n_slope").unwrap().parse().unwrap();
    assert!(n_slope < -4.0, "{n_slope}");
}
