use crate::spectral::TorusGrid;

use super::NoiseError;

/// One driven Fourier mode. Only one of each `±k` pair is stored; the partner
/// receives the complex conjugate increment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrivenMode {
    pub flat: usize,
    pub partner: usize,
    pub k: [i64; 3],
    pub k2: f64,
    pub sigma: f64,
}

impl DrivenMode {
    pub fn is_self_conjugate(&self) -> bool {
        self.flat == self.partner
    }
}

/// Construction parameters for [`NoiseOperator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub decay: f64,
    pub cutoff: usize,
    pub target_order: u32,
    pub p: f64,
    /// Drive a scalar potential and use its gradient as the velocity noise.
    pub gradient: bool,
    pub include_mean: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            amplitude: 0.0,
            decay: 3.0,
            cutoff: 1,
            target_order: 0,
            p: 2.0,
            gradient: false,
            include_mean: true,
        }
    }
}

/// Finite-rank additive noise, diagonal in Fourier space with
/// `σ_k = A (1 + |k|^2)^{-γ/2}` on every mode with `|k|_∞ <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOperator {
    grid: TorusGrid,
    spec: NoiseSpec,
    modes: Vec<DrivenMode>,
    admissibility_sum: f64,
    admissible: bool,
}

impl NoiseOperator {
    pub fn build(grid: TorusGrid, spec: NoiseSpec) -> Result<Self, NoiseError> {
        if !(spec.amplitude >= 0.0) || !spec.amplitude.is_finite() {
            return Err(NoiseError::InvalidArgument(format!(
                "noise amplitude must be nonnegative (got {})",
                spec.amplitude
            )));
        }
        if !spec.decay.is_finite() {
            return Err(NoiseError::InvalidArgument("noise decay must be finite".into()));
        }
        if spec.cutoff > grid.dealias_cutoff() {
            return Err(NoiseError::InvalidArgument(format!(
                "noise cutoff {} exceeds the dealiasing-safe range n/3 = {}",
                spec.cutoff,
                grid.dealias_cutoff()
            )));
        }

        let mut modes = Vec::new();
        for flat in 0..grid.len() {
            let m = grid.wave_index(flat);
            if m.linf() as usize > spec.cutoff || !is_representative(&m.k) {
                continue;
            }
            let is_mean = m.k == [0, 0, 0];
            if is_mean && !spec.include_mean {
                continue;
            }
            let neg = [-m.k[0], -m.k[1], -m.k[2]];
            let partner = grid.mode_index(neg).expect("driven modes are below Nyquist");
            let sigma = spec.amplitude * (1.0 + m.k2).powf(-spec.decay / 2.0);
            modes.push(DrivenMode {
                flat,
                partner,
                k: m.k,
                k2: m.k2,
                sigma,
            });
        }

        let components = if spec.gradient { 1 } else { grid.dim() };
        let order = spec.target_order as f64;
        let admissibility_sum = components as f64
            * modes
                .iter()
                .map(|m| {
                    let w = m.sigma * m.sigma * (1.0 + m.k2).powf(order);
                    if m.is_self_conjugate() {
                        w
                    } else {
                        2.0 * w
                    }
                })
                .sum::<f64>();
        let admissible = spec.decay > order + grid.dim() as f64 / 2.0;

        Ok(Self {
            grid,
            spec,
            modes,
            admissibility_sum,
            admissible,
        })
    }

    pub fn zero(grid: TorusGrid) -> Self {
        Self::build(grid, NoiseSpec::default()).expect("zero noise is valid")
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }

    pub fn modes(&self) -> &[DrivenMode] {
        &self.modes
    }

    /// `S(n) = Σ_{k,j} σ_{k,j}^2 (1 + |k|^2)^n` over all driven modes.
    pub fn admissibility_sum(&self) -> f64 {
        self.admissibility_sum
    }

    /// `γ > n + d/2`: the sum above stays bounded as the cutoff grows.
    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn is_gradient(&self) -> bool {
        self.spec.gradient
    }

    /// Independent noise channels per mode.
    pub fn channels(&self) -> usize {
        if self.spec.gradient {
            1
        } else {
            self.grid.dim()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|m| m.sigma == 0.0)
    }

    pub fn sigma(&self, k: [i64; 3]) -> f64 {
        self.modes
            .iter()
            .find(|m| m.k == k || m.k == [-k[0], -k[1], -k[2]])
            .map_or(0.0, |m| m.sigma)
    }
}

/// `k = 0`, or the first nonzero component of `k` is positive.
fn is_representative(k: &[i64; 3]) -> bool {
    match k.iter().find(|&&c| c != 0) {
        None => true,
        Some(&c) => c > 0,
    }
}
