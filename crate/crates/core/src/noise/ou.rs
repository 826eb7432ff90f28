//! Exact-in-law simulation of the stochastic convolution
//! `dz = (νΔz + f) dt + g dW`, `z(0) = 0`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spectral::{
    self, jacobian, linf_norm, lp_norm, nonlinearity, ou_variance_factor, phi1, sobolev_norm,
    Complex64, Dealias, Field, TorusGrid,
};

use super::{NoiseError, NoiseOperator, RngStream};

/// `z` at one time, as a `d`-component vector field.
#[derive(Debug, Clone)]
pub struct OUState {
    pub t: f64,
    pub z: Field,
}

impl OUState {
    pub fn zero(grid: TorusGrid) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.dim() * grid.len()];
        Self {
            t: 0.0,
            z: Field::from_spectral(grid, grid.dim(), coeffs).expect("shape built from grid"),
        }
    }
}

/// Norms of `z` consumed by the estimate monitors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZNorms {
    pub t: f64,
    pub lp: f64,
    pub sob1: f64,
    pub sob2: f64,
    pub sob3: f64,
    pub grad_inf: f64,
    /// `|(z·∇)z|_{L^p}`
    pub advection_lp: f64,
}

impl ZNorms {
    pub fn of(t: f64, z: &Field, p: f64, dealiasing: Dealias) -> Result<Self, NoiseError> {
        Ok(Self {
            t,
            lp: lp_norm(z, p)?,
            sob1: sobolev_norm(z, 1, p)?,
            sob2: sobolev_norm(z, 2, p)?,
            sob3: sobolev_norm(z, 3, p)?,
            grad_inf: linf_norm(&jacobian(z)?),
            advection_lp: lp_norm(&nonlinearity(z, 1.0, dealiasing)?, p)?,
        })
    }
}

/// One exact OU step per Fourier mode:
/// `z' = e^{-λ dt} z + φ(λ, dt) f + η`, `λ = ν|k|^2`, with `η` Gaussian of
/// variance `σ^2 (1 - e^{-2λ dt}) / (2λ)`, conjugate-paired so `z` stays real.
///
/// The same number of normals is drawn for every `ν`, so runs that share a
/// stream share their Wiener increments.
pub fn ou_step(
    state: &OUState,
    dt: f64,
    nu: f64,
    forcing: Option<&Field>,
    noise: &NoiseOperator,
    rng: &mut ChaCha8Rng,
) -> Result<OUState, NoiseError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(NoiseError::InvalidArgument(format!(
            "time step must be positive (got {dt})"
        )));
    }
    let grid = *state.z.grid();
    let d = grid.dim();
    let total = grid.len();
    if let Some(f) = forcing {
        state.z.check_compatible(f)?;
    }

    let mut coeffs = state.z.spectral().to_vec();
    let forcing_coeffs = forcing.map(|f| f.spectral());
    for flat in 0..total {
        let lambda = nu * grid.wave_index(flat).k2;
        let decay = (-lambda * dt).exp();
        let weight = phi1(lambda, dt);
        for j in 0..d {
            let slot = &mut coeffs[j * total + flat];
            *slot *= decay;
            if let Some(f) = forcing_coeffs {
                *slot += f[j * total + flat] * weight;
            }
        }
    }

    let kscale = grid.k_scale();
    for mode in noise.modes() {
        let var = mode.sigma * mode.sigma * ou_variance_factor(nu * mode.k2, dt);
        for channel in 0..noise.channels() {
            let eta = if mode.is_self_conjugate() {
                let xi: f64 = rng.sample(StandardNormal);
                Complex64::new(var.sqrt() * xi, 0.0)
            } else {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * (0.5 * var).sqrt()
            };
            if noise.is_gradient() {
                for j in 0..d {
                    let inc = Complex64::new(0.0, mode.k[j] as f64 * kscale) * eta;
                    add_paired(&mut coeffs, j * total, mode.flat, mode.partner, inc);
                }
            } else {
                add_paired(&mut coeffs, channel * total, mode.flat, mode.partner, eta);
            }
        }
    }

    Ok(OUState {
        t: state.t + dt,
        z: Field::from_spectral(grid, d, coeffs)?,
    })
}

fn add_paired(coeffs: &mut [Complex64], offset: usize, flat: usize, partner: usize, inc: Complex64) {
    if flat == partner {
        coeffs[offset + flat] += Complex64::new(inc.re, 0.0);
    } else {
        coeffs[offset + flat] += inc;
        coeffs[offset + partner] += inc.conj();
    }
}

/// Streaming OU sampler started from `z(0) = 0`.
#[derive(Debug, Clone)]
pub struct OuStepper {
    state: OUState,
    dt: f64,
    nu: f64,
    forcing: Option<Field>,
    noise: NoiseOperator,
    rng: ChaCha8Rng,
    steps: u64,
}

impl OuStepper {
    pub fn new(
        dt: f64,
        nu: f64,
        forcing: Option<Field>,
        noise: NoiseOperator,
        stream: RngStream,
    ) -> Result<Self, NoiseError> {
        if !(dt > 0.0) {
            return Err(NoiseError::InvalidArgument(format!(
                "time step must be positive (got {dt})"
            )));
        }
        Ok(Self {
            state: OUState::zero(*noise.grid()),
            dt,
            nu,
            forcing,
            noise,
            rng: stream.rng(),
            steps: 0,
        })
    }

    pub fn state(&self) -> &OUState {
        &self.state
    }

    pub fn forcing(&self) -> Option<&Field> {
        self.forcing.as_ref()
    }

    pub fn advance(&mut self) -> Result<&OUState, NoiseError> {
        let next = ou_step(
            &self.state,
            self.dt,
            self.nu,
            self.forcing.as_ref(),
            &self.noise,
            &mut self.rng,
        )?;
        self.steps += 1;
        // keep times on the exact step grid
        self.state = OUState {
            t: self.steps as f64 * self.dt,
            z: next.z,
        };
        Ok(&self.state)
    }
}

/// Sampled path of `z` on the step grid, with the norms needed by the
/// a priori estimates.
#[derive(Debug, Clone)]
pub struct OUPath {
    states: Vec<OUState>,
    norms: Vec<ZNorms>,
    forcing: Option<Field>,
}

impl OUPath {
    /// Path from explicit states; times must be strictly increasing.
    pub fn from_states(
        states: Vec<OUState>,
        forcing: Option<Field>,
        p: f64,
        dealiasing: Dealias,
    ) -> Result<Self, NoiseError> {
        if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(NoiseError::InvalidArgument(
                "path times must be strictly increasing".into(),
            ));
        }
        let norms = states
            .iter()
            .map(|s| ZNorms::of(s.t, &s.z, p, dealiasing))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            states,
            norms,
            forcing,
        })
    }

    pub fn states(&self) -> &[OUState] {
        &self.states
    }

    pub fn norms(&self) -> &[ZNorms] {
        &self.norms
    }

    pub fn forcing(&self) -> Option<&Field> {
        self.forcing.as_ref()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn sup_lp(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max(n.lp))
    }

    pub fn sup_sob1(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max(n.sob1))
    }

    pub fn sup_sob2(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max(n.sob2))
    }

    pub fn sup_grad_inf(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max(n.grad_inf))
    }
}

/// Number of steps of size `dt` covering `[0, t_final]`.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize, NoiseError> {
    if !(t_final > 0.0) || !(dt > 0.0) {
        return Err(NoiseError::InvalidArgument(format!(
            "horizon and step must be positive (T = {t_final}, dt = {dt})"
        )));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) || steps < 1.0 {
        return Err(NoiseError::InvalidArgument(format!(
            "dt = {dt} does not divide T = {t_final}"
        )));
    }
    Ok(steps as usize)
}

/// Iterates [`ou_step`] from `z(0) = 0` up to `t_final`, recording every state.
#[allow(clippy::too_many_arguments)]
pub fn ou_path(
    t_final: f64,
    dt: f64,
    nu: f64,
    forcing: Option<&Field>,
    noise: &NoiseOperator,
    stream: RngStream,
    p: f64,
    dealiasing: Dealias,
) -> Result<OUPath, NoiseError> {
    let steps = step_count(t_final, dt)?;
    let mut stepper = OuStepper::new(dt, nu, forcing.cloned(), noise.clone(), stream)?;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(stepper.state().clone());
    for _ in 0..steps {
        states.push(stepper.advance()?.clone());
    }
    OUPath::from_states(states, forcing.cloned(), p, dealiasing)
}

/// Empirical Hölder exponent in time: least-squares slope of
/// `log RMS_s |z(s+h) - z(s)|` against `log h` over dyadic lags
/// `h = 2^j dt <= (path length)/4`, measured in `H^{order,p}`.
///
/// Returns `+∞` when every increment vanishes.
pub fn holder_exponent_estimate(path: &OUPath, order: u32, p: f64) -> Result<f64, NoiseError> {
    let states = path.states();
    if states.len() < 101 {
        return Err(NoiseError::InvalidArgument(format!(
            "Hölder estimate needs at least 100 steps (got {})",
            states.len().saturating_sub(1)
        )));
    }
    let steps = states.len() - 1;
    let dt = (states[steps].t - states[0].t) / steps as f64;
    let mut points = Vec::new();
    let mut lag = 1usize;
    while lag <= steps / 4 {
        let sq: Vec<f64> = (0..=steps - lag)
            .map(|i| {
                let diff = states[i + lag].z.lin_comb(1.0, &states[i].z, -1.0)?;
                let norm = if order == 0 && p == 2.0 {
                    spectral::spectral_l2_norm(&diff)
                } else {
                    sobolev_norm(&diff, order, p)?
                };
                Ok(norm * norm)
            })
            .collect::<Result<_, NoiseError>>()?;
        let rms = (spectral::pairwise_sum(&sq) / sq.len() as f64).sqrt();
        if rms > 0.0 {
            points.push(((lag as f64 * dt).ln(), rms.ln()));
        }
        lag *= 2;
    }
    if points.len() < 2 {
        return Ok(f64::INFINITY);
    }
    Ok(least_squares_slope(&points))
}

pub(crate) fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
