use std::f64::consts::PI;

use super::SpectralError;

/// Uniform periodic grid on the torus `[0, period)^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    period: f64,
}

/// A retained Fourier mode: integer wave vector plus its scaled squared length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveIndex {
    pub k: [i64; 3],
    /// `|k|^2 (2π/period)^2`, the symbol of `-Δ`.
    pub k2: f64,
}

impl WaveIndex {
    pub fn linf(&self) -> i64 {
        self.k.iter().map(|c| c.abs()).max().unwrap_or(0)
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::InvalidGrid(format!(
                "dimension must be 1, 2 or 3 (got {dim})"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!(
                "points per axis must be a power of two >= 4 (got {n})"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(SpectralError::InvalidGrid(format!(
                "period must be positive (got {period})"
            )));
        }
        Ok(Self { dim, n, period })
    }

    /// Grid on `[0, 2π)^d`.
    pub fn standard(dim: usize, n: usize) -> Result<Self, SpectralError> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total number of grid points, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Base wavenumber `2π/period`.
    pub fn k_scale(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Signed integer wavenumber of FFT bin `i` along one axis. The Nyquist
    /// bin maps to `+n/2`.
    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Splits a flat row-major index (last axis fastest) into axis indices.
    pub fn unravel(&self, flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        let mut rem = flat;
        for axis in (0..self.dim).rev() {
            idx[axis] = rem % self.n;
            rem /= self.n;
        }
        idx
    }

    pub fn ravel(&self, idx: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.n + idx[axis])
    }

    /// Flat index of the bin holding integer wave vector `k`, if representable.
    pub fn mode_index(&self, k: [i64; 3]) -> Option<usize> {
        let half = (self.n / 2) as i64;
        let mut idx = [0usize; 3];
        for axis in 0..self.dim {
            let kj = k[axis];
            if kj.abs() > half || (kj == -half) {
                return None;
            }
            idx[axis] = kj.rem_euclid(self.n as i64) as usize;
        }
        if k[self.dim..].iter().any(|&c| c != 0) {
            return None;
        }
        Some(self.ravel(idx))
    }

    pub fn wave_index(&self, flat: usize) -> WaveIndex {
        let idx = self.unravel(flat);
        let mut k = [0i64; 3];
        let mut sq = 0i64;
        for axis in 0..self.dim {
            k[axis] = self.axis_wavenumber(idx[axis]);
            sq += k[axis] * k[axis];
        }
        let s = self.k_scale();
        WaveIndex {
            k,
            k2: sq as f64 * s * s,
        }
    }

    /// Every FFT bin, in storage order.
    pub fn modes(&self) -> impl Iterator<Item = WaveIndex> + '_ {
        (0..self.len()).map(move |flat| self.wave_index(flat))
    }

    /// Physical coordinate of grid point `flat`.
    pub fn coords(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = idx[axis] as f64 * h;
        }
        x
    }

    /// Two-thirds rule: a bin survives iff every `|k_j| <= n/3`.
    pub fn survives_dealiasing(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.dim).all(|axis| 3 * self.axis_wavenumber(idx[axis]).unsigned_abs() as usize <= self.n)
    }

    /// Largest integer wavenumber kept by the two-thirds rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n / 3
    }

    /// Minimal-image periodic distance between two points.
    pub fn torus_distance_sq(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        let mut sum = 0.0;
        for axis in 0..self.dim {
            let mut delta = (a[axis] - b[axis]).abs() % self.period;
            if delta > 0.5 * self.period {
                delta = self.period - delta;
            }
            sum += delta * delta;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::standard(0, 8).is_err());
        assert!(TorusGrid::standard(4, 8).is_err());
        assert!(TorusGrid::standard(1, 2).is_err());
        assert!(TorusGrid::standard(1, 12).is_err());
        assert!(TorusGrid::new(1, 8, 0.0).is_err());
        assert!(TorusGrid::standard(3, 8).is_ok());
    }

    #[test]
    fn modes_cover_every_bin_once() {
        let g = TorusGrid::standard(2, 8).unwrap();
        let mut seen = std::collections::HashSet::new();
        for (flat, m) in g.modes().enumerate() {
            assert!(seen.insert((m.k[0], m.k[1])));
            assert_eq!(g.mode_index(m.k).unwrap_or(flat), flat);
        }
        assert_eq!(seen.len(), 64);
    }

    #[test]
    fn ravel_roundtrip() {
        let g = TorusGrid::standard(3, 4).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.ravel(g.unravel(flat)), flat);
        }
    }

    #[test]
    fn dealias_mask_counts() {
        let g = TorusGrid::standard(1, 64).unwrap();
        let kept = (0..g.len()).filter(|&i| g.survives_dealiasing(i)).count();
        // |k| <= 21
        assert_eq!(kept, 43);
    }

    #[test]
    fn scaled_wavenumbers() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let m = g.wave_index(1);
        assert!((m.k2 - (2.0 * PI).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn periodic_distance_uses_minimal_image() {
        let g = TorusGrid::standard(1, 8).unwrap();
        let d = g.torus_distance_sq(&[0.1, 0.0, 0.0], &[2.0 * PI - 0.1, 0.0, 0.0]);
        assert!((d - 0.04).abs() < 1e-12);
    }
}
