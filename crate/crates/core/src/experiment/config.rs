use std::collections::BTreeMap;
use std::f64::consts::TAU;

use crate::noise::{NoiseOperator, NoiseSpec};
use crate::solver::{Scheme, SolverConfig};
use crate::spectral::{Dealias, TorusGrid};

/// Why a config document was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}`: {message}")]
    BadValue { line: usize, key: String, message: String },
    #[error("`{key}` violates constraint {constraint}: {message}")]
    Constraint {
        key: String,
        constraint: String,
        message: String,
    },
}

/// Fourier modes `k:amp` of a potential `Σ amp cos(k·x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub modes: Vec<([i64; 3], f64)>,
}

impl PotentialSpec {
    /// Parses `"1:1.0; 2,1:0.5"`; wavevectors pad with zeros.
    pub fn parse(text: &str, dim: usize) -> Result<Self, String> {
        let mut modes = Vec::new();
        for item in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, amp) = item
                .split_once(':')
                .ok_or_else(|| format!("mode `{item}` is not of the form k:amp"))?;
            let k = parse_wavevector(k, dim)?;
            let amp: f64 = amp
                .trim()
                .parse()
                .map_err(|_| format!("amplitude `{}` is not a number", amp.trim()))?;
            modes.push((k, amp));
        }
        Ok(Self { modes })
    }

    pub fn render(&self, dim: usize) -> String {
        self.modes
            .iter()
            .map(|(k, a)| format!("{}:{}", render_wavevector(k, dim), a))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn parse_wavevector(text: &str, dim: usize) -> Result<[i64; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.is_empty() || parts.len() > dim {
        return Err(format!("wavevector `{}` needs 1 to {dim} entries", text.trim()));
    }
    let mut k = [0i64; 3];
    for (slot, part) in k.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("wavevector entry `{part}` is not an integer"))?;
    }
    Ok(k)
}

fn render_wavevector(k: &[i64; 3], dim: usize) -> String {
    k[..dim].iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    /// `u_component = amp sin(k·x)`, other components zero.
    SingleMode { k: [i64; 3], amp: f64, component: usize },
    /// `u0 = ∇ψ0`.
    Gradient(PotentialSpec),
    /// Independent normal Fourier coefficients scaled by `(1+|k|^2)^{-decay/2}`
    /// on `1 <= |k|_∞ <= cutoff`.
    RandomSmooth { seed: u64, decay: f64, cutoff: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    None,
    /// `f = ∇U`.
    GradientPotential(PotentialSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub n: usize,
    pub period: f64,
    pub solver: SolverConfig,
    pub init: InitSpec,
    pub forcing: ForcingSpec,
    pub noise: NoiseSpec,
    pub seed: u64,
    pub samples: usize,
    pub sweep_nus: Option<Vec<f64>>,
    pub hj_factor: Option<f64>,
    pub sweep_sup_samples: usize,
    pub output_dir: String,
    /// Steps between written snapshots; 0 writes only the initial and final ones.
    pub snapshot_every: usize,
    pub c_torus: f64,
    pub c_rd: f64,
    pub c_bkm: f64,
    pub bkm_t0: f64,
    pub convergence_dts: Vec<f64>,
    pub convergence_ns: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            n: 64,
            period: TAU,
            solver: SolverConfig::default(),
            init: InitSpec::Zero,
            forcing: ForcingSpec::None,
            noise: NoiseSpec::default(),
            seed: 0,
            samples: 1,
            sweep_nus: None,
            hj_factor: None,
            sweep_sup_samples: 10,
            output_dir: "out".into(),
            snapshot_every: 0,
            c_torus: 1.0,
            c_rd: 1.0,
            c_bkm: 1.0,
            bkm_t0: 0.0,
            convergence_dts: vec![4e-3, 2e-3, 1e-3, 5e-4],
            convergence_ns: vec![32, 64, 128],
            warnings: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> TorusGrid {
        TorusGrid::new(self.dim, self.n, self.period).expect("validated grid")
    }

    pub fn noise_operator(&self) -> NoiseOperator {
        NoiseOperator::build(self.grid(), self.noise).expect("validated noise")
    }

    /// Canonical `key = value` lines, covering every setting.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        let s = &self.solver;
        put("grid.dim", self.dim.to_string());
        put("grid.n", self.n.to_string());
        put("grid.period", self.period.to_string());
        put("solver.nu", s.nu.to_string());
        put("solver.p", s.p.to_string());
        put("solver.dt", s.dt.to_string());
        put("solver.t_final", s.t_final.to_string());
        put("solver.scheme", s.scheme.name().to_string());
        put("solver.sign", s.sign.to_string());
        put("solver.picard_tol", s.picard_tol.to_string());
        put("solver.picard_max_iter", s.picard_max_iter.to_string());
        put(
            "solver.blowup_threshold",
            s.blowup_threshold.map_or("auto".into(), |b| b.to_string()),
        );
        put(
            "solver.dealias",
            match s.dealias {
                Dealias::TwoThirds => "two_thirds".into(),
                Dealias::Off => "off".into(),
            },
        );
        put("solver.linear_only", s.linear_only.to_string());
        put("solver.window_constant", s.window_constant.to_string());
        match &self.init {
            InitSpec::Zero => put("init.kind", "zero".into()),
            InitSpec::SingleMode { k, amp, component } => {
                put("init.kind", "single_mode".into());
                put("init.k", render_wavevector(k, self.dim));
                put("init.amp", amp.to_string());
                put("init.component", component.to_string());
            }
            InitSpec::Gradient(pot) => {
                put("init.kind", "gradient".into());
                put("init.modes", pot.render(self.dim));
            }
            InitSpec::RandomSmooth { seed, decay, cutoff } => {
                put("init.kind", "random_smooth".into());
                put("init.seed", seed.to_string());
                put("init.decay", decay.to_string());
                put("init.cutoff", cutoff.to_string());
            }
        }
        match &self.forcing {
            ForcingSpec::None => put("forcing.kind", "none".into()),
            ForcingSpec::GradientPotential(pot) => {
                put("forcing.kind", "gradient_potential".into());
                put("forcing.modes", pot.render(self.dim));
            }
        }
        let nz = &self.noise;
        put("noise.amplitude", nz.amplitude.to_string());
        put("noise.gamma", nz.decay.to_string());
        put("noise.cutoff", nz.cutoff.to_string());
        put("noise.target_order", nz.target_order.to_string());
        put("noise.gradient", nz.gradient.to_string());
        put("noise.include_mean", nz.include_mean.to_string());
        put("run.seed", self.seed.to_string());
        put("run.samples", self.samples.to_string());
        if let Some(nus) = &self.sweep_nus {
            put("sweep.nu", join(nus));
        }
        if let Some(h) = self.hj_factor {
            put("sweep.hj_factor", h.to_string());
        }
        put("sweep.sup_samples", self.sweep_sup_samples.to_string());
        put("output.dir", self.output_dir.clone());
        put("output.snapshot_every", self.snapshot_every.to_string());
        put("estimates.c_torus", self.c_torus.to_string());
        put("estimates.c_rd", self.c_rd.to_string());
        put("estimates.c_bkm", self.c_bkm.to_string());
        put("estimates.bkm_t0", self.bkm_t0.to_string());
        put("convergence.dts", join(&self.convergence_dts));
        put("convergence.ns", join(&self.convergence_ns));
        out
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

struct Entry {
    line: usize,
    value: String,
}

/// Key-value lines keyed by `section.key`, consumed as they are read.
struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("expected `section.key = value`, found `{content}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let well_formed = key.split('.').count() == 2
                && key
                    .split('.')
                    .all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
            if !well_formed {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` is not of the form section.key"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` has no value"),
                });
            }
            if let Some(prev) = entries.insert(
                key.to_string(),
                Entry {
                    line,
                    value: value.to_string(),
                },
            ) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("key `{key}` already set on line {}", prev.line),
                });
            }
        }
        Ok(Self { entries })
    }

    fn take<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|message| ConfigError::BadValue {
                line: e.line,
                key: key.to_string(),
                message,
            }),
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.into_iter().min_by_key(|(_, e)| e.line) {
            None => Ok(()),
            Some((key, e)) => Err(ConfigError::UnknownKey { line: e.line, key }),
        }
    }
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn uint(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("`{s}` is not a nonnegative integer"))
}

fn u64v(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("`{s}` is not a 64-bit unsigned integer"))
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("`{s}` is not true or false")),
    }
}

fn list<T>(s: &str, item: fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(item).collect()
}

fn constraint(key: &str, constraint: &str, message: String) -> ConfigError {
    ConfigError::Constraint {
        key: key.into(),
        constraint: constraint.into(),
        message,
    }
}

/// Parses and validates a flat `section.key = value` document. Lines may
/// carry `#` comments; every key must be known and appear once.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut doc = Document::parse(text)?;
    let mut cfg = ExperimentConfig::default();

    if let Some(d) = doc.take("grid.dim", uint)? {
        cfg.dim = d;
    }
    if let Some(n) = doc.take("grid.n", uint)? {
        cfg.n = n;
    }
    if let Some(l) = doc.take("grid.period", real)? {
        cfg.period = l;
    }

    let s = &mut cfg.solver;
    if let Some(v) = doc.take("solver.nu", real)? {
        s.nu = v;
    }
    if let Some(v) = doc.take("solver.p", real)? {
        s.p = v;
    }
    if let Some(v) = doc.take("solver.dt", real)? {
        s.dt = v;
    }
    if let Some(v) = doc.take("solver.t_final", real)? {
        s.t_final = v;
    }
    if let Some(v) = doc.take("solver.scheme", |x| match x {
        "etd1" => Ok(Scheme::Etd1),
        "picard" => Ok(Scheme::Picard),
        _ => Err(format!("`{x}` is not etd1 or picard")),
    })? {
        s.scheme = v;
    }
    if let Some(v) = doc.take("solver.sign", real)? {
        s.sign = v;
    }
    if let Some(v) = doc.take("solver.picard_tol", real)? {
        s.picard_tol = v;
    }
    if let Some(v) = doc.take("solver.picard_max_iter", uint)? {
        s.picard_max_iter = v;
    }
    if let Some(v) = doc.take("solver.blowup_threshold", |x| {
        if x == "auto" {
            Ok(None)
        } else {
            real(x).map(Some)
        }
    })? {
        s.blowup_threshold = v;
    }
    if let Some(v) = doc.take("solver.dealias", |x| match x {
        "two_thirds" => Ok(Dealias::TwoThirds),
        "off" => Ok(Dealias::Off),
        _ => Err(format!("`{x}` is not two_thirds or off")),
    })? {
        s.dealias = v;
    }
    if let Some(v) = doc.take("solver.linear_only", boolean)? {
        s.linear_only = v;
    }
    if let Some(v) = doc.take("solver.window_constant", real)? {
        s.window_constant = v;
    }

    let dim = cfg.dim;
    if !(1..=3).contains(&dim) {
        return Err(constraint("grid.dim", "1 <= d <= 3", format!("got {dim}")));
    }
    let kind_line = doc.line_of("init.kind");
    let kind = doc.take("init.kind", |x| Ok(x.to_string()))?.unwrap_or_else(|| "zero".into());
    cfg.init = match kind.as_str() {
        "zero" => InitSpec::Zero,
        "single_mode" => InitSpec::SingleMode {
            k: doc.take("init.k", |x| parse_wavevector(x, dim))?.unwrap_or([1, 0, 0]),
            amp: doc.take("init.amp", real)?.unwrap_or(1.0),
            component: doc.take("init.component", uint)?.unwrap_or(0),
        },
        "gradient" => InitSpec::Gradient(
            doc.take("init.modes", |x| PotentialSpec::parse(x, dim))?
                .unwrap_or(PotentialSpec { modes: vec![([1, 0, 0], 1.0)] }),
        ),
        "random_smooth" => InitSpec::RandomSmooth {
            seed: doc.take("init.seed", u64v)?.unwrap_or(0),
            decay: doc.take("init.decay", real)?.unwrap_or(2.0),
            cutoff: doc.take("init.cutoff", uint)?.unwrap_or(4),
        },
        other => {
            return Err(ConfigError::BadValue {
                line: kind_line.unwrap_or(0),
                key: "init.kind".into(),
                message: format!("`{other}` is not zero, single_mode, gradient or random_smooth"),
            })
        }
    };

    let kind_line = doc.line_of("forcing.kind");
    let kind = doc.take("forcing.kind", |x| Ok(x.to_string()))?.unwrap_or_else(|| "none".into());
    cfg.forcing = match kind.as_str() {
        "none" => ForcingSpec::None,
        "gradient_potential" => ForcingSpec::GradientPotential(
            doc.take("forcing.modes", |x| PotentialSpec::parse(x, dim))?
                .unwrap_or(PotentialSpec { modes: Vec::new() }),
        ),
        other => {
            return Err(ConfigError::BadValue {
                line: kind_line.unwrap_or(0),
                key: "forcing.kind".into(),
                message: format!("`{other}` is not none or gradient_potential"),
            })
        }
    };

    let nz = &mut cfg.noise;
    if let Some(v) = doc.take("noise.amplitude", real)? {
        nz.amplitude = v;
    }
    if let Some(v) = doc.take("noise.gamma", real)? {
        nz.decay = v;
    }
    if let Some(v) = doc.take("noise.cutoff", uint)? {
        nz.cutoff = v;
    }
    if let Some(v) = doc.take("noise.target_order", |x| x.parse::<u32>().map_err(|_| format!("`{x}` is not an order")))? {
        nz.target_order = v;
    }
    if let Some(v) = doc.take("noise.gradient", boolean)? {
        nz.gradient = v;
    }
    if let Some(v) = doc.take("noise.include_mean", boolean)? {
        nz.include_mean = v;
    }
    nz.p = cfg.solver.p;

    if let Some(v) = doc.take("run.seed", u64v)? {
        cfg.seed = v;
    }
    if let Some(v) = doc.take("run.samples", uint)? {
        cfg.samples = v;
    }
    cfg.sweep_nus = doc.take("sweep.nu", |x| list(x, real))?;
    cfg.hj_factor = doc.take("sweep.hj_factor", real)?;
    if let Some(v) = doc.take("sweep.sup_samples", uint)? {
        cfg.sweep_sup_samples = v;
    }
    if let Some(v) = doc.take("output.dir", |x| Ok(x.to_string()))? {
        cfg.output_dir = v;
    }
    if let Some(v) = doc.take("output.snapshot_every", uint)? {
        cfg.snapshot_every = v;
    }
    if let Some(v) = doc.take("estimates.c_torus", real)? {
        cfg.c_torus = v;
    }
    if let Some(v) = doc.take("estimates.c_rd", real)? {
        cfg.c_rd = v;
    }
    if let Some(v) = doc.take("estimates.c_bkm", real)? {
        cfg.c_bkm = v;
    }
    if let Some(v) = doc.take("estimates.bkm_t0", real)? {
        cfg.bkm_t0 = v;
    }
    if let Some(v) = doc.take("convergence.dts", |x| list(x, real))? {
        cfg.convergence_dts = v;
    }
    if let Some(v) = doc.take("convergence.ns", |x| list(x, uint))? {
        cfg.convergence_ns = v;
    }
    doc.finish()?;
    validate(&mut cfg)?;
    Ok(cfg)
}

/// Checks cross-field constraints and records warnings.
pub fn validate(cfg: &mut ExperimentConfig) -> Result<(), ConfigError> {
    let d = cfg.dim;
    let grid = TorusGrid::new(d, cfg.n, cfg.period)
        .map_err(|e| constraint("grid", "n a power of two >= 4, period > 0", e.to_string()))?;
    let s = &cfg.solver;
    if !(s.p > d as f64) {
        return Err(constraint("solver.p", "p > d", format!("p = {} with d = {d}", s.p)));
    }
    s.validate(d).map_err(|e| constraint("solver", "solver settings", e.to_string()))?;
    let steps = s.steps().map_err(|e| constraint("solver.dt", "dt divides t_final", e.to_string()))?;
    if cfg.snapshot_every > steps {
        return Err(constraint(
            "output.snapshot_every",
            "cadence <= number of steps",
            format!("{} > {steps}", cfg.snapshot_every),
        ));
    }
    match &cfg.init {
        InitSpec::SingleMode { k, component, .. } => {
            if *component >= d {
                return Err(constraint("init.component", "component < d", format!("got {component}")));
            }
            check_modes("init.k", &[(*k, 1.0)], &grid)?;
        }
        InitSpec::Gradient(pot) => check_modes("init.modes", &pot.modes, &grid)?,
        InitSpec::RandomSmooth { cutoff, .. } => {
            if *cutoff == 0 || *cutoff > grid.dealias_cutoff() {
                return Err(constraint(
                    "init.cutoff",
                    "1 <= cutoff <= n/3",
                    format!("got {cutoff} with n = {}", cfg.n),
                ));
            }
        }
        InitSpec::Zero => {}
    }
    if let ForcingSpec::GradientPotential(pot) = &cfg.forcing {
        check_modes("forcing.modes", &pot.modes, &grid)?;
    }
    let op = NoiseOperator::build(grid, cfg.noise).map_err(|e| constraint("noise", "A >= 0, cutoff <= n/3", e.to_string()))?;
    cfg.warnings.clear();
    if !op.is_zero() && !op.is_admissible() {
        let nz = &cfg.noise;
        cfg.warnings.push(format!(
            "noise not admissible: gamma = {} does not exceed target_order + d/2 = {}",
            nz.decay,
            nz.target_order as f64 + d as f64 / 2.0
        ));
    }
    if cfg.samples == 0 {
        return Err(constraint("run.samples", "samples >= 1", "got 0".into()));
    }
    if let Some(nus) = &cfg.sweep_nus {
        if nus.len() < 3 || nus.windows(2).any(|w| !(w[1] < w[0])) || nus.iter().any(|&v| !(v > 0.0)) {
            return Err(constraint(
                "sweep.nu",
                "at least three positive, strictly decreasing viscosities",
                format!("got {nus:?}"),
            ));
        }
    }
    if cfg.sweep_sup_samples == 0 {
        return Err(constraint("sweep.sup_samples", "sup_samples >= 1", "got 0".into()));
    }
    for (key, c) in [
        ("estimates.c_torus", cfg.c_torus),
        ("estimates.c_rd", cfg.c_rd),
        ("estimates.c_bkm", cfg.c_bkm),
    ] {
        if !(c > 0.0) {
            return Err(constraint(key, "C > 0", format!("got {c}")));
        }
    }
    if !(cfg.bkm_t0 >= 0.0 && cfg.bkm_t0 <= s.t_final) {
        return Err(constraint("estimates.bkm_t0", "0 <= t0 <= t_final", format!("got {}", cfg.bkm_t0)));
    }
    if cfg.convergence_dts.len() < 3
        || cfg.convergence_dts.windows(2).any(|w| !(w[1] < w[0]))
        || cfg.convergence_dts.iter().any(|&dt| !(dt > 0.0))
    {
        return Err(constraint(
            "convergence.dts",
            "at least three positive, strictly decreasing steps",
            format!("got {:?}", cfg.convergence_dts),
        ));
    }
    if cfg.convergence_ns.len() < 2
        || cfg.convergence_ns.windows(2).any(|w| w[1] <= w[0])
        || cfg.convergence_ns.iter().any(|&n| TorusGrid::new(d, n, cfg.period).is_err())
    {
        return Err(constraint(
            "convergence.ns",
            "at least two increasing powers of two >= 4",
            format!("got {:?}", cfg.convergence_ns),
        ));
    }
    Ok(())
}

fn check_modes(key: &str, modes: &[([i64; 3], f64)], grid: &TorusGrid) -> Result<(), ConfigError> {
    for (k, _) in modes {
        let resolved = grid.mode_index(*k).is_some_and(|flat| grid.survives_dealiasing(flat));
        if !resolved || k[grid.dim()..].iter().any(|&v| v != 0) {
            return Err(constraint(
                key,
                "|k_j| <= n/3 on every axis",
                format!("mode {:?} is not resolved at n = {}", &k[..grid.dim()], grid.n()),
            ));
        }
    }
    Ok(())
}
