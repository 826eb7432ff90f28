//! Random-coefficient equation for `v = u - z`, advanced by exponential
//! Euler or by Picard iteration of the mild form, with `u = v + z`
//! assembled for diagnostics and the blow-up guard.

mod config;
mod stepping;
mod trajectory;

use std::collections::VecDeque;

pub use config::{Scheme, SolverConfig};
pub use stepping::{advection, etd1_step, picard_window, window_steps, PicardWindow};
pub use trajectory::{Snapshot, StepRecord, Status, Trajectory};

use crate::noise::{NoiseError, NoiseOperator, OUPath, OuStepper, RngStream};
use crate::spectral::{lp_norm, Field, SpectralError};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite values after step ending at t = {t}")]
    NumericalOverflow { t: f64 },
    #[error("Picard iteration did not contract after {iterations} iterations")]
    PicardFailure { iterations: usize },
    #[error("noise path exhausted at step {step}")]
    PathExhausted { step: usize },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

/// Supplies `z` on the step grid, one step at a time.
pub trait ZSource {
    fn initial(&self) -> Field;
    fn advance(&mut self) -> Result<Field, SolverError>;
}

impl ZSource for OuStepper {
    fn initial(&self) -> Field {
        self.state().z.clone()
    }

    fn advance(&mut self) -> Result<Field, SolverError> {
        Ok(OuStepper::advance(self)?.z.clone())
    }
}

/// Replays a precomputed path.
pub struct FrozenPath<'a> {
    path: &'a OUPath,
    next: usize,
}

impl<'a> FrozenPath<'a> {
    pub fn new(path: &'a OUPath) -> Self {
        Self { path, next: 1 }
    }
}

impl ZSource for FrozenPath<'_> {
    fn initial(&self) -> Field {
        self.path.states()[0].z.clone()
    }

    fn advance(&mut self) -> Result<Field, SolverError> {
        let state = self
            .path
            .states()
            .get(self.next)
            .ok_or(SolverError::PathExhausted { step: self.next })?;
        self.next += 1;
        Ok(state.z.clone())
    }
}

/// Stops integration once `|u|_{L^p}` exceeds the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpGuard {
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardDecision {
    Continue,
    Stop,
}

impl BlowUpGuard {
    pub fn new(threshold: f64) -> Self {
        Self { threshold }
    }

    pub fn check(&self, lp_u: f64) -> GuardDecision {
        if !lp_u.is_finite() || lp_u > self.threshold {
            GuardDecision::Stop
        } else {
            GuardDecision::Continue
        }
    }
}

/// Samples `z` from the noise and forcing, then advances `v`.
pub fn solve(
    u0: &Field,
    forcing: Option<&Field>,
    noise: &NoiseOperator,
    cfg: &SolverConfig,
    stream: RngStream,
) -> Result<Trajectory, SolverError> {
    let mut source = OuStepper::new(cfg.dt, cfg.nu, forcing.cloned(), noise.clone(), stream)?;
    solve_with(u0, &mut source, cfg)
}

/// Advances `v` against a given `z` source. Failures during integration end
/// up in [`Trajectory::status`]; only invalid input is an `Err`.
pub fn solve_with(u0: &Field, source: &mut dyn ZSource, cfg: &SolverConfig) -> Result<Trajectory, SolverError> {
    let grid = *u0.grid();
    cfg.validate(grid.dim())?;
    if u0.components() != grid.dim() {
        return Err(SolverError::InvalidConfig(format!(
            "initial velocity needs {} components (got {})",
            grid.dim(),
            u0.components()
        )));
    }
    if !u0.is_finite() {
        return Err(SolverError::InvalidConfig("initial velocity is not finite".into()));
    }
    let steps = cfg.steps()?;
    let z_init = source.initial();
    u0.check_compatible(&z_init)?;

    // v(0) = u0 - z(0)
    let v0 = u0.sub(&z_init)?;
    let first = StepRecord::measure(0.0, &v0, &z_init, cfg, 0)?;
    let guard = BlowUpGuard::new(cfg.threshold_for(first.lp_u));
    let mut run = Run {
        cfg,
        records: vec![first],
        snapshots: vec![Snapshot {
            t: 0.0,
            step: 0,
            v: v0.clone(),
            z: z_init.clone(),
        }],
        guard,
    };

    let status = match cfg.scheme {
        Scheme::Etd1 => run.etd1(v0, z_init, source, steps)?,
        Scheme::Picard => run.picard(v0, z_init, source, steps)?,
    };

    Ok(Trajectory {
        config: cfg.clone(),
        u0: u0.clone(),
        records: run.records,
        snapshots: run.snapshots,
        status,
    })
}

struct Run<'c> {
    cfg: &'c SolverConfig,
    records: Vec<StepRecord>,
    snapshots: Vec<Snapshot>,
    guard: BlowUpGuard,
}

impl Run<'_> {
    fn time(&self, step: usize) -> f64 {
        step as f64 * self.cfg.dt
    }

    /// Records step `step`; returns a blow-up status if the guard fires.
    fn accept(
        &mut self,
        step: usize,
        steps: usize,
        v: &Field,
        z: &Field,
        iters: usize,
    ) -> Result<Option<Status>, SolverError> {
        let t = self.time(step);
        let last_valid = self.records.last().map_or(0.0, |r| r.t);
        if !v.is_finite() {
            return Ok(Some(Status::BlowUp {
                last_valid,
                detected: t,
            }));
        }
        let lp_u = lp_norm(&v.add(z)?, self.cfg.p)?;
        if self.guard.check(lp_u) == GuardDecision::Stop {
            return Ok(Some(Status::BlowUp {
                last_valid,
                detected: t,
            }));
        }
        self.records.push(StepRecord::measure(t, v, z, self.cfg, iters)?);
        let every = self.cfg.snapshot_every;
        if step == steps || (every > 0 && step.is_multiple_of(every)) {
            self.snapshots.push(Snapshot {
                t,
                step,
                v: v.clone(),
                z: z.clone(),
            });
        }
        Ok(None)
    }

    fn keep_last_snapshot(&mut self, step: usize, v: &Field, z: &Field) {
        if self.snapshots.last().map(|s| s.step) != Some(step) {
            self.snapshots.push(Snapshot {
                t: self.time(step),
                step,
                v: v.clone(),
                z: z.clone(),
            });
        }
    }

    fn etd1(
        &mut self,
        mut v: Field,
        mut z: Field,
        source: &mut dyn ZSource,
        steps: usize,
    ) -> Result<Status, SolverError> {
        for step in 1..=steps {
            let t = self.time(step - 1);
            let next = match etd1_step(&v, &z, self.cfg, t) {
                Ok(next) => next,
                Err(SolverError::NumericalOverflow { t: detected }) => {
                    self.keep_last_snapshot(step - 1, &v, &z);
                    return Ok(Status::BlowUp {
                        last_valid: t,
                        detected,
                    });
                }
                Err(e) => return Err(e),
            };
            let z_next = source.advance()?;
            if let Some(status) = self.accept(step, steps, &next, &z_next, 1)? {
                self.keep_last_snapshot(step - 1, &v, &z);
                return Ok(status);
            }
            v = next;
            z = z_next;
        }
        Ok(Status::Completed)
    }

    fn picard(
        &mut self,
        mut v: Field,
        z0: Field,
        source: &mut dyn ZSource,
        steps: usize,
    ) -> Result<Status, SolverError> {
        const MAX_HALVINGS: u32 = 10;
        // z at steps `base..`, buffered so failed windows can be retried
        let mut buffer: VecDeque<Field> = VecDeque::from([z0]);
        let mut base = 0usize;
        while base < steps {
            let lp_u = self.records.last().map_or(0.0, |r| r.lp_u);
            let initial = window_steps(lp_u, self.cfg);
            let mut halvings = 0u32;
            let window = loop {
                let len = (initial >> halvings).max(1).min(steps - base);
                while buffer.len() < len + 1 {
                    buffer.push_back(source.advance()?);
                }
                let nodes: Vec<Field> = buffer.iter().take(len + 1).cloned().collect();
                match picard_window(&v, &nodes, self.cfg) {
                    Ok(w) => break w,
                    Err(SolverError::PicardFailure { .. }) if len > 1 && halvings < MAX_HALVINGS => {
                        halvings += 1;
                    }
                    Err(SolverError::PicardFailure { .. }) => {
                        let z = buffer.front().expect("buffer holds the current node").clone();
                        self.keep_last_snapshot(base, &v, &z);
                        return Ok(Status::PicardFailure { t: self.time(base) });
                    }
                    Err(e) => return Err(e),
                }
            };
            let len = window.nodes.len() - 1;
            for (i, vi) in window.nodes.iter().enumerate().skip(1) {
                let zi = buffer[i].clone();
                if let Some(status) = self.accept(base + i, steps, vi, &zi, window.iterations)? {
                    let prev = &window.nodes[i - 1];
                    let zp = buffer[i - 1].clone();
                    self.keep_last_snapshot(base + i - 1, prev, &zp);
                    return Ok(status);
                }
            }
            v = window.nodes[len].clone();
            for _ in 0..len {
                buffer.pop_front();
            }
            base += len;
        }
        Ok(Status::Completed)
    }
}
