use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::estimates::{bkm_monitor, calibrate_torus_constant, EstimateConstants, EstimateError, EstimateReport};
use crate::noise::{least_squares_slope, ou_path, step_count, NoiseOperator, OUPath, Purpose, RngStream};
use crate::oracle::{
    expectation_estimates, fit_linear_constant, hj_coefficient, hopf_cole_solve, hopf_lax_solve, nu_sweep,
    OracleError, SweepConfig,
};
use crate::solver::{solve, solve_with, FrozenPath, SolverConfig, SolverError, Trajectory};
use crate::spectral::{gradient, linf_norm, lp_norm, pairwise_sum, Complex64, Field, SpectralError, TorusGrid};

use super::config::{ConfigError, ExperimentConfig, ForcingSpec, InitSpec, PotentialSpec};
use super::manifest::RunManifest;
use super::snapshot::{write_snapshot, SnapshotError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Ensemble,
    SweepNu,
    OracleCompare,
    Convergence,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ensemble => "ensemble",
            Command::SweepNu => "sweep-nu",
            Command::OracleCompare => "oracle-compare",
            Command::Convergence => "convergence",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        [
            Command::Simulate,
            Command::Ensemble,
            Command::SweepNu,
            Command::OracleCompare,
            Command::Convergence,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Unsupported(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl RunError {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Unsupported(_) => "unsupported",
            RunError::Io { .. } | RunError::Csv(_) => "io",
            RunError::Snapshot(_) => "snapshot",
            RunError::Solver(_) => "solver",
            RunError::Oracle(_) => "oracle",
            RunError::Estimate(_) => "estimate",
            RunError::Spectral(_) => "spectral",
            RunError::Threads(_) => "threads",
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Number formatting shared by every table: shortest round-trip form.
fn num(x: f64) -> String {
    x.to_string()
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Output directory bookkeeping: every written file is listed in the manifest.
struct Outputs {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Outputs {
    fn open(dir: &Path, manifest: RunManifest) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        manifest.write_atomic(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    fn snapshot(&mut self, name: &str, field: &Field, t: f64) -> Result<(), RunError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        write_snapshot(field, t, &path)?;
        self.manifest.files.push(name.to_string());
        Ok(())
    }

    fn summary(&mut self, key: &str, value: impl ToString) {
        self.manifest.summary.push((key.to_string(), value.to_string()));
    }

    fn finish(mut self) -> Result<RunManifest, RunError> {
        self.manifest.state = "complete".into();
        self.manifest.write_atomic(&self.dir).map_err(io_err(&self.dir))?;
        Ok(self.manifest)
    }
}

/// Runs `command` with outputs in `out_dir`, on `threads` workers (all
/// available cores when `None`). Results do not depend on the worker count.
pub fn run(command: Command, cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunManifest, RunError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Threads(e.to_string()))?;
    pool.install(|| {
        let manifest = RunManifest::new(command.name(), cfg.echo(), cfg.warnings.clone());
        let mut out = Outputs::open(out_dir, manifest)?;
        let result = match command {
            Command::Simulate => simulate(cfg, &mut out),
            Command::Ensemble => ensemble(cfg, &mut out),
            Command::SweepNu => sweep(cfg, &mut out),
            Command::OracleCompare => oracle_compare(cfg, &mut out),
            Command::Convergence => convergence(cfg, &mut out),
        };
        match result {
            Ok(()) => out.finish(),
            Err(e) => {
                out.manifest.state = "failed".into();
                out.summary("error_kind", e.kind());
                out.summary("error", e.to_string().replace('\n', " "));
                let _ = out.manifest.write_atomic(&out.dir);
                Err(e)
            }
        }
    })
}

/// `Σ amp cos(k·x)`
pub fn potential_field(grid: TorusGrid, spec: &PotentialSpec) -> Field {
    let scale = grid.k_scale();
    Field::scalar_fn(grid, |x| {
        spec.modes
            .iter()
            .map(|(k, amp)| {
                let phase: f64 = (0..grid.dim()).map(|j| k[j] as f64 * scale * x[j]).sum();
                amp * phase.cos()
            })
            .sum()
    })
}

pub fn initial_velocity(cfg: &ExperimentConfig) -> Result<Field, RunError> {
    let grid = cfg.grid();
    let d = grid.dim();
    let scale = grid.k_scale();
    Ok(match &cfg.init {
        InitSpec::Zero => Field::zeros(grid, d),
        InitSpec::SingleMode { k, amp, component } => Field::from_fn(grid, d, |x, j| {
            if j == *component {
                let phase: f64 = (0..d).map(|a| k[a] as f64 * scale * x[a]).sum();
                amp * phase.sin()
            } else {
                0.0
            }
        }),
        InitSpec::Gradient(pot) => gradient(&potential_field(grid, pot))?,
        InitSpec::RandomSmooth { seed, decay, cutoff } => random_smooth(grid, *seed, *decay, *cutoff)?,
    })
}

fn random_smooth(grid: TorusGrid, seed: u64, decay: f64, cutoff: usize) -> Result<Field, RunError> {
    let d = grid.dim();
    let total = grid.len();
    let mut rng = RngStream::new(seed, 0, Purpose::InitialCondition).rng();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); d * total];
    for j in 0..d {
        for flat in 0..total {
            let w = grid.wave_index(flat);
            let lin = w.linf();
            if lin == 0 || lin > cutoff as i64 || grid.mode_index(neg(w.k)).is_none() {
                continue;
            }
            // draw on one representative of each conjugate pair
            let first = w.k.iter().copied().find(|&v| v != 0).unwrap_or(0);
            if first < 0 {
                continue;
            }
            let a = (1.0 + w.k2).powf(-decay / 2.0) / std::f64::consts::SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let c = Complex64::new(a * re, a * im);
            let partner = grid.mode_index(neg(w.k)).expect("checked above");
            coeffs[j * total + flat] = c;
            coeffs[j * total + partner] = c.conj();
        }
    }
    Ok(Field::from_spectral(grid, d, coeffs)?)
}

fn neg(k: [i64; 3]) -> [i64; 3] {
    [-k[0], -k[1], -k[2]]
}

fn forcing_potential(cfg: &ExperimentConfig) -> Option<Field> {
    match &cfg.forcing {
        ForcingSpec::None => None,
        ForcingSpec::GradientPotential(pot) => Some(potential_field(cfg.grid(), pot)),
    }
}

pub fn forcing_velocity(cfg: &ExperimentConfig) -> Result<Option<Field>, RunError> {
    Ok(forcing_potential(cfg).map(|u| gradient(&u)).transpose()?)
}

fn constants(cfg: &ExperimentConfig) -> EstimateConstants {
    EstimateConstants {
        torus: cfg.c_torus,
        rd: cfg.c_rd,
        bkm: cfg.c_bkm,
    }
}

fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig {
        snapshot_every: cfg.snapshot_every,
        ..cfg.solver.clone()
    }
}

pub const DIAGNOSTIC_COLUMNS: [&str; 11] = [
    "t",
    "lp_norm_u",
    "sob1p_u",
    "sob2p_z",
    "grad_z_inf",
    "curl_inf",
    "div_inf",
    "apriori_torus_rhs",
    "apriori_rd_rhs",
    "ratio_torus",
    "picard_iters",
];

fn diagnostics_table(traj: &Trajectory, rep: &EstimateReport) -> Table {
    let mut t = Table::new(&DIAGNOSTIC_COLUMNS);
    for (i, r) in traj.records.iter().enumerate() {
        t.push(vec![
            num(r.t),
            num(r.lp_u),
            num(r.sob1_u),
            num(r.z.sob2),
            num(r.z.grad_inf),
            num(r.curl_inf),
            num(r.div_inf),
            num(rep.rhs_torus[i]),
            num(rep.rhs_rd[i]),
            num(rep.ratio_torus[i]),
            r.picard_iters.to_string(),
        ]);
    }
    t
}

fn status_summary(out: &mut Outputs, traj: &Trajectory) {
    out.summary("status", traj.status.name());
    out.summary("final_t", num(traj.final_time()));
    if let Some(t) = traj.status.stop_time() {
        out.summary("stop_t", num(t));
    }
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let grid = cfg.grid();
    let u0 = initial_velocity(cfg)?;
    let forcing = forcing_velocity(cfg)?;
    let stream = RngStream::noise(cfg.seed, 0);
    out.manifest.seeds.push(stream.fingerprint());
    let traj = solve(&u0, forcing.as_ref(), &cfg.noise_operator(), &solver_config(cfg), stream)?;
    out.manifest.statuses.push(traj.status.name().into());
    let rep = EstimateReport::from_trajectory(&traj, constants(cfg))?;
    out.table("diagnostics.csv", &diagnostics_table(&traj, &rep))?;

    let mut est = Table::new(&[
        "t",
        "lhs",
        "apriori_torus_rhs",
        "apriori_rd_rhs",
        "ratio_torus",
        "ratio_rd",
        "linf_v",
        "sup_norm_rhs",
    ]);
    for i in 0..rep.times.len() {
        est.push(vec![
            num(rep.times[i]),
            num(rep.lhs[i]),
            num(rep.rhs_torus[i]),
            num(rep.rhs_rd[i]),
            num(rep.ratio_torus[i]),
            num(rep.ratio_rd[i]),
            num(rep.lhs_sup[i]),
            num(rep.rhs_sup[i]),
        ]);
    }
    out.table("estimates.csv", &est)?;
    if let Some(res) = &rep.residual {
        let mut t = Table::new(&["t", "residual"]);
        for (a, b) in res.times.iter().zip(&res.residual) {
            t.push(vec![num(*a), num(*b)]);
        }
        out.table("dissipation.csv", &t)?;
        out.summary("dissipation_max_violation", num(res.max_violation()));
    }
    for snap in &traj.snapshots {
        out.snapshot(&format!("snapshots/u_{:08}.sbf", snap.step), &snap.u(), snap.t)?;
    }

    let t0 = cfg.bkm_t0.min(traj.final_time());
    let bkm = bkm_monitor(&traj, t0, cfg.c_bkm)?;
    status_summary(out, &traj);
    out.summary("max_ratio_torus", num(rep.max_ratio_torus()));
    out.summary("max_ratio_sup_norm", num(rep.max_ratio_sup()));
    out.summary("bkm_t0", num(bkm.t0));
    out.summary("bkm_sup_curl", num(bkm.sup_curl));
    out.summary("bkm_curl_defined", bkm.curl_defined);
    out.summary("bkm_div_t0", num(bkm.div_t0));
    out.summary("bkm_final_bound", num(bkm.final_bound()));
    out.summary("grid_points", grid.len());
    Ok(())
}

/// Mean and standard error with fixed-order pairwise sums.
fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (m, f64::NAN);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - m).powi(2)).collect();
    (m, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

struct SampleResult {
    traj: Trajectory,
    report: EstimateReport,
    bkm_bound: f64,
    sup_curl: f64,
}

fn ensemble(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let u0 = initial_velocity(cfg)?;
    let forcing = forcing_velocity(cfg)?;
    let noise = cfg.noise_operator();
    let solver = SolverConfig {
        snapshot_every: 0,
        ..cfg.solver.clone()
    };
    let results: Vec<SampleResult> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| -> Result<SampleResult, RunError> {
            let traj = solve(&u0, forcing.as_ref(), &noise, &solver, RngStream::noise(cfg.seed, i))?;
            let report = EstimateReport::from_trajectory(&traj, constants(cfg))?;
            let bkm = bkm_monitor(&traj, cfg.bkm_t0.min(traj.final_time()), cfg.c_bkm)?;
            Ok(SampleResult {
                bkm_bound: bkm.final_bound(),
                sup_curl: bkm.sup_curl,
                traj,
                report,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut samples = Table::new(&[
        "sample",
        "stream",
        "status",
        "final_t",
        "final_lp_norm_u",
        "max_ratio_torus",
        "sup_curl_inf",
        "bkm_final_bound",
    ]);
    for (i, r) in results.iter().enumerate() {
        let fp = RngStream::noise(cfg.seed, i as u64).fingerprint();
        out.manifest.seeds.push(fp);
        out.manifest.statuses.push(r.traj.status.name().into());
        samples.push(vec![
            i.to_string(),
            fp.to_string(),
            r.traj.status.name().into(),
            num(r.traj.final_time()),
            num(r.traj.records.last().map_or(f64::NAN, |x| x.lp_u)),
            num(r.report.max_ratio_torus()),
            num(r.sup_curl),
            num(r.bkm_bound),
        ]);
    }
    out.table("samples.csv", &samples)?;

    let steps = results.iter().map(|r| r.traj.records.len()).max().unwrap_or(0);
    let mut agg = Table::new(&[
        "t",
        "samples",
        "mean_lp_norm_u",
        "se_lp_norm_u",
        "mean_ratio_torus",
        "se_ratio_torus",
        "max_ratio_torus",
    ]);
    for s in 0..steps {
        let alive: Vec<&SampleResult> = results.iter().filter(|r| r.traj.records.len() > s).collect();
        let lp: Vec<f64> = alive.iter().map(|r| r.traj.records[s].lp_u).collect();
        let ratio: Vec<f64> = alive.iter().map(|r| r.report.ratio_torus[s]).collect();
        let (m_lp, se_lp) = mean_se(&lp);
        let (m_r, se_r) = mean_se(&ratio);
        agg.push(vec![
            num(alive[0].traj.records[s].t),
            alive.len().to_string(),
            num(m_lp),
            num(se_lp),
            num(m_r),
            num(se_r),
            num(ratio.iter().cloned().fold(0.0, f64::max)),
        ]);
    }
    out.table("ensemble.csv", &agg)?;

    let reports: Vec<EstimateReport> = results.iter().map(|r| r.report.clone()).collect();
    let calibrated = calibrate_torus_constant(&reports)?;
    let within = reports.iter().filter(|r| r.max_ratio_torus() <= 1.0).count();
    let completed = results.iter().filter(|r| r.traj.status.is_completed()).count();
    let bounded = results.iter().filter(|r| r.bkm_bound.is_finite()).count();
    out.summary("samples", results.len());
    out.summary("completed", completed);
    out.summary("calibrated_c_torus", num(calibrated));
    out.summary("samples_ratio_at_most_one", within);
    out.summary("samples_bkm_bound_finite", bounded);
    Ok(())
}

fn gradient_data(cfg: &ExperimentConfig, what: &str) -> Result<Field, RunError> {
    match &cfg.init {
        InitSpec::Gradient(pot) => Ok(potential_field(cfg.grid(), pot)),
        _ => Err(RunError::Unsupported(format!("{what} needs init.kind = gradient"))),
    }
}

fn gradient_noise(cfg: &ExperimentConfig, what: &str) -> Result<Option<NoiseOperator>, RunError> {
    let op = cfg.noise_operator();
    if op.is_zero() {
        return Ok(None);
    }
    if cfg.dim > 1 && !op.is_gradient() {
        return Err(RunError::Unsupported(format!("{what} with noise needs noise.gradient = true")));
    }
    Ok(Some(op))
}

fn sweep(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let psi0 = gradient_data(cfg, "sweep-nu")?;
    let nus = cfg
        .sweep_nus
        .clone()
        .ok_or_else(|| RunError::Unsupported("sweep-nu needs sweep.nu".into()))?;
    let noise = gradient_noise(cfg, "sweep-nu")?;
    let deterministic = noise.is_none();
    let steps = cfg.solver.steps()?;
    let base = SweepConfig {
        nus: nus.clone(),
        psi0,
        potential: forcing_potential(cfg),
        noise,
        solver: SolverConfig {
            snapshot_every: (steps / cfg.sweep_sup_samples).max(1),
            ..cfg.solver.clone()
        },
        hj_factor: cfg.hj_factor,
        stream: RngStream::noise(cfg.seed, 0),
        sup_samples: cfg.sweep_sup_samples,
    };
    let samples = if deterministic { 1 } else { cfg.samples };
    let results = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            nu_sweep(&SweepConfig {
                stream: RngStream::noise(cfg.seed, i),
                ..base.clone()
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&["sample", "nu", "gap_to_next", "gap_to_hopf_lax", "sup_h1p_pow", "status"]);
    for (s, res) in results.iter().enumerate() {
        if !deterministic {
            out.manifest.seeds.push(RngStream::noise(cfg.seed, s as u64).fingerprint());
        }
        for (i, e) in res.entries.iter().enumerate() {
            out.manifest.statuses.push(e.status.name().into());
            table.push(vec![
                s.to_string(),
                num(e.nu),
                res.gaps.get(i).map_or(String::new(), |g| num(*g)),
                res.gaps_to_hopf_lax.as_ref().map_or(String::new(), |g| num(g[i])),
                num(e.sup_h1p_pow),
                e.status.name().into(),
            ]);
        }
    }
    out.table("sweep.csv", &table)?;

    let first = &results[0];
    if let Some(hl) = &first.gaps_to_hopf_lax {
        out.summary("hopf_lax_gaps_decreasing", hl.windows(2).all(|w| w[1] < w[0]));
        out.summary("fitted_k", num(fit_linear_constant(&nus, hl)));
    } else {
        out.summary("fitted_k", num(fit_linear_constant(&nus[..nus.len() - 1], &first.gaps)));
    }
    if results.len() >= 30 {
        let stats = expectation_estimates(&results)?;
        let mut t = Table::new(&["nu", "mean_sup_h1p_pow", "std_error"]);
        for i in 0..stats.nus.len() {
            t.push(vec![num(stats.nus[i]), num(stats.mean[i]), num(stats.std_error[i])]);
        }
        out.table("expectation.csv", &t)?;
        out.summary("expectation_slope", num(stats.slope));
        out.summary("expectation_uniform", stats.uniform);
    }
    Ok(())
}

fn oracle_compare(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let psi0 = gradient_data(cfg, "oracle-compare")?;
    if gradient_noise(cfg, "oracle-compare")?.is_some() {
        return Err(RunError::Unsupported("oracle-compare needs noise.amplitude = 0".into()));
    }
    let potential = forcing_potential(cfg);
    let forcing = potential.as_ref().map(gradient).transpose()?;
    let steps = cfg.solver.steps()?;
    let solver = SolverConfig {
        snapshot_every: if cfg.snapshot_every > 0 {
            cfg.snapshot_every
        } else {
            (steps / 10).max(1)
        },
        ..cfg.solver.clone()
    };
    let u0 = gradient(&psi0)?;
    let noise = NoiseOperator::zero(cfg.grid());
    let stream = RngStream::noise(cfg.seed, 0);
    out.manifest.seeds.push(stream.fingerprint());
    let traj = solve(&u0, forcing.as_ref(), &noise, &solver, stream)?;
    out.manifest.statuses.push(traj.status.name().into());
    let c = hj_coefficient(cfg.solver.sign, cfg.hj_factor);
    let nu = cfg.solver.nu;

    let rows = traj
        .snapshots
        .par_iter()
        .map(|snap| -> Result<Vec<String>, RunError> {
            let exact = hopf_cole_solve(&psi0, nu, potential.as_ref(), snap.t, c, cfg.solver.dt)?;
            let u = snap.u();
            let diff = u.sub(&exact.u)?;
            let scale = lp_norm(&exact.u, 2.0)?;
            let abs = lp_norm(&diff, 2.0)?;
            let rel = if scale > 0.0 { abs / scale } else { abs };
            let hl_gap = if potential.is_none() && snap.t > 0.0 {
                num(linf_norm(&exact.psi.sub(&hopf_lax_solve(&psi0, snap.t, c)?)?))
            } else {
                String::new()
            };
            Ok(vec![
                num(snap.t),
                num(rel),
                num(linf_norm(&diff)),
                num(exact.curl_inf()?),
                hl_gap,
            ])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_rel = rows
        .iter()
        .map(|r| r[1].parse::<f64>().unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    let mut table = Table::new(&["t", "rel_l2_error", "linf_error", "oracle_curl_inf", "hopf_lax_gap"]);
    rows.into_iter().for_each(|r| table.push(r));
    out.table("oracle.csv", &table)?;
    status_summary(out, &traj);
    out.summary("max_rel_l2_error", num(max_rel));
    Ok(())
}

/// Restricts `fine` to `coarse` by keeping the shared Fourier modes.
pub fn restrict(fine: &Field, coarse: TorusGrid) -> Result<Field, RunError> {
    let fg = *fine.grid();
    if fg.dim() != coarse.dim() || fg.period() != coarse.period() || coarse.n() > fg.n() {
        return Err(RunError::Unsupported("restriction needs a coarser grid of the same torus".into()));
    }
    let comps = fine.components();
    let (ft, ct) = (fg.len(), coarse.len());
    let spec = fine.spectral();
    let mut out = vec![Complex64::new(0.0, 0.0); comps * ct];
    for flat in 0..ct {
        let w = coarse.wave_index(flat);
        if (0..coarse.dim()).any(|a| coarse.is_nyquist(coarse.unravel(flat)[a])) {
            continue;
        }
        if let Some(src) = fg.mode_index(w.k) {
            for j in 0..comps {
                out[j * ct + flat] = spec[j * ft + src];
            }
        }
    }
    Ok(Field::from_spectral(coarse, comps, out)?)
}

fn rel_l2(a: &Field, b: &Field) -> Result<f64, RunError> {
    let scale = lp_norm(b, 2.0)?;
    let abs = lp_norm(&a.sub(b)?, 2.0)?;
    Ok(if scale > 0.0 { abs / scale } else { abs })
}

fn log_slope(levels: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .zip(errors)
        .filter(|(_, e)| **e > 0.0)
        .map(|(l, e)| (l.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    least_squares_slope(&pts)
}

fn convergence(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), RunError> {
    let u0 = initial_velocity(cfg)?;
    let forcing = forcing_velocity(cfg)?;
    let stream = RngStream::noise(cfg.seed, 0);
    out.manifest.seeds.push(stream.fingerprint());

    let dts = &cfg.convergence_dts;
    if let Some(dt) = dts.iter().find(|&&dt| step_count(cfg.solver.t_final, dt).is_err()) {
        return Err(ConfigError::Constraint {
            key: "convergence.dts".into(),
            constraint: "every step divides t_final".into(),
            message: format!("dt = {dt} does not divide t_final = {}", cfg.solver.t_final),
        }
        .into());
    }
    // every level replays one path sampled at the finest step, so the
    // differences measure the scheme and not independent noise draws
    let fine_dt = dts[dts.len() - 1];
    let strides = dts
        .iter()
        .map(|&dt| {
            let m = (dt / fine_dt).round();
            if m >= 1.0 && (m * fine_dt - dt).abs() <= 1e-9 * dt {
                Ok(m as usize)
            } else {
                Err(ConfigError::Constraint {
                    key: "convergence.dts".into(),
                    constraint: "every step is an integer multiple of the smallest".into(),
                    message: format!("dt = {dt} is not a multiple of {fine_dt}"),
                })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let path = ou_path(
        cfg.solver.t_final,
        fine_dt,
        cfg.solver.nu,
        forcing.as_ref(),
        &cfg.noise_operator(),
        stream,
        cfg.solver.p,
        cfg.solver.dealias,
    )
    .map_err(SolverError::from)?;
    let finals = dts
        .par_iter()
        .zip(&strides)
        .map(|(&dt, &stride)| -> Result<Trajectory, RunError> {
            let solver = SolverConfig {
                dt,
                snapshot_every: 0,
                ..cfg.solver.clone()
            };
            let states = path.states().iter().step_by(stride).cloned().collect();
            let coarse = OUPath::from_states(states, forcing.clone(), solver.p, solver.dealias).map_err(SolverError::from)?;
            Ok(solve_with(&u0, &mut FrozenPath::new(&coarse), &solver)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    for t in &finals {
        out.manifest.statuses.push(t.status.name().into());
    }
    let dt_err = finals
        .windows(2)
        .map(|w| rel_l2(&w[0].final_u(), &w[1].final_u()))
        .collect::<Result<Vec<_>, _>>()?;
    let dt_slope = log_slope(&dts[..dts.len() - 1], &dt_err);

    let ns = &cfg.convergence_ns;
    let by_n = ns
        .par_iter()
        .map(|&n| -> Result<Trajectory, RunError> {
            let level = ExperimentConfig {
                n,
                ..cfg.clone()
            };
            let grid = level.grid();
            let noise = NoiseOperator::build(grid, cfg.noise).map_err(|e| RunError::Unsupported(e.to_string()))?;
            let solver = SolverConfig {
                snapshot_every: 0,
                ..cfg.solver.clone()
            };
            Ok(solve(
                &initial_velocity(&level)?,
                forcing_velocity(&level)?.as_ref(),
                &noise,
                &solver,
                stream,
            )?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let finest = by_n.last().expect("at least two resolutions").final_u();
    let n_err = by_n[..by_n.len() - 1]
        .iter()
        .map(|t| {
            let u = t.final_u();
            rel_l2(&u, &restrict(&finest, *u.grid())?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n_levels: Vec<f64> = ns[..ns.len() - 1].iter().map(|&n| n as f64).collect();
    let n_slope = log_slope(&n_levels, &n_err);

    let mut table = Table::new(&["kind", "level", "error", "fitted_slope"]);
    for (dt, e) in dts.iter().zip(&dt_err) {
        table.push(vec!["dt".into(), num(*dt), num(*e), num(dt_slope)]);
    }
    for (n, e) in ns.iter().zip(&n_err) {
        table.push(vec!["n".into(), n.to_string(), num(*e), num(n_slope)]);
    }
    out.table("convergence.csv", &table)?;
    out.summary("dt_slope", num(dt_slope));
    out.summary("n_slope", num(n_slope));
    Ok(())
}
