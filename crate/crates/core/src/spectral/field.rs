use std::sync::OnceLock;

use rustfft::num_complex::Complex64;

use super::{fft, SpectralError, TorusGrid, WaveIndex};

/// Scalar or vector function sampled on a [`TorusGrid`].
///
/// A field holds a physical and/or a spectral representation. Whichever is
/// missing is computed on first access and cached, so a `Field` behaves like
/// an immutable value; mutation through `*_mut` drops the other cache.
///
/// Spectral coefficients are normalized so that
/// `f(x) = Σ_k c_k e^{i k·x}` with `c_k = N^{-1} Σ_x f(x) e^{-i k·x}`.
#[derive(Debug, Clone)]
pub struct Field {
    grid: TorusGrid,
    components: usize,
    physical: OnceLock<Vec<f64>>,
    spectral: OnceLock<Vec<Complex64>>,
}

impl Field {
    pub fn zeros(grid: TorusGrid, components: usize) -> Self {
        Self::from_physical(grid, components, vec![0.0; components * grid.len()])
            .expect("zero field has consistent shape")
    }

    pub fn from_physical(
        grid: TorusGrid,
        components: usize,
        values: Vec<f64>,
    ) -> Result<Self, SpectralError> {
        check_shape(&grid, components, values.len())?;
        let physical = OnceLock::new();
        let _ = physical.set(values);
        Ok(Self {
            grid,
            components,
            physical,
            spectral: OnceLock::new(),
        })
    }

    pub fn from_spectral(
        grid: TorusGrid,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        check_shape(&grid, components, coeffs.len())?;
        let spectral = OnceLock::new();
        let _ = spectral.set(coeffs);
        Ok(Self {
            grid,
            components,
            physical: OnceLock::new(),
            spectral,
        })
    }

    /// Samples `f(x, component)` at every grid point.
    pub fn from_fn(grid: TorusGrid, components: usize, f: impl Fn(&[f64; 3], usize) -> f64) -> Self {
        let total = grid.len();
        let mut values = Vec::with_capacity(components * total);
        for j in 0..components {
            for flat in 0..total {
                values.push(f(&grid.coords(flat), j));
            }
        }
        Self::from_physical(grid, components, values).expect("shape built from grid")
    }

    pub fn scalar_fn(grid: TorusGrid, f: impl Fn(&[f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, 1, |x, _| f(x))
    }

    pub fn constant(grid: TorusGrid, components: usize, value: f64) -> Self {
        Self::from_physical(grid, components, vec![value; components * grid.len()])
            .expect("shape built from grid")
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn is_scalar(&self) -> bool {
        self.components == 1
    }

    pub fn physical(&self) -> &[f64] {
        self.physical.get_or_init(|| {
            let coeffs = self.spectral.get().expect("field holds one representation");
            fft::inverse(&self.grid, coeffs)
        })
    }

    pub fn spectral(&self) -> &[Complex64] {
        self.spectral.get_or_init(|| {
            let values = self.physical.get().expect("field holds one representation");
            fft::forward(&self.grid, values)
        })
    }

    pub fn has_physical(&self) -> bool {
        self.physical.get().is_some()
    }

    pub fn has_spectral(&self) -> bool {
        self.spectral.get().is_some()
    }

    pub fn physical_mut(&mut self) -> &mut Vec<f64> {
        self.physical();
        self.spectral = OnceLock::new();
        self.physical.get_mut().expect("initialized above")
    }

    pub fn spectral_mut(&mut self) -> &mut Vec<Complex64> {
        self.spectral();
        self.physical = OnceLock::new();
        self.spectral.get_mut().expect("initialized above")
    }

    pub fn into_physical(self) -> Vec<f64> {
        self.physical();
        self.physical.into_inner().expect("initialized above")
    }

    pub fn into_spectral(self) -> Vec<Complex64> {
        self.spectral();
        self.spectral.into_inner().expect("initialized above")
    }

    pub fn component_physical(&self, j: usize) -> &[f64] {
        let total = self.grid.len();
        &self.physical()[j * total..(j + 1) * total]
    }

    pub fn component_spectral(&self, j: usize) -> &[Complex64] {
        let total = self.grid.len();
        &self.spectral()[j * total..(j + 1) * total]
    }

    /// Extracts component `j` as a scalar field, keeping whichever
    /// representation is already available.
    pub fn component(&self, j: usize) -> Field {
        let total = self.grid.len();
        if let Some(coeffs) = self.spectral.get() {
            Field::from_spectral(self.grid, 1, coeffs[j * total..(j + 1) * total].to_vec())
                .expect("component slice has grid length")
        } else {
            Field::from_physical(self.grid, 1, self.component_physical(j).to_vec())
                .expect("component slice has grid length")
        }
    }

    /// Concatenates scalar (or vector) fields into one multi-component field.
    pub fn stack(parts: &[Field]) -> Result<Field, SpectralError> {
        let first = parts.first().ok_or(SpectralError::ShapeMismatch {
            expected: 1,
            found: 0,
        })?;
        let grid = first.grid;
        let components: usize = parts.iter().map(|p| p.components).sum();
        for p in parts {
            if p.grid != grid {
                return Err(SpectralError::GridMismatch);
            }
        }
        if parts.iter().all(|p| p.has_spectral()) {
            let coeffs = parts.iter().flat_map(|p| p.spectral().iter().copied()).collect();
            Field::from_spectral(grid, components, coeffs)
        } else {
            let values = parts.iter().flat_map(|p| p.physical().iter().copied()).collect();
            Field::from_physical(grid, components, values)
        }
    }

    /// New field with every spectral coefficient transformed by `f(mode, component, c)`.
    pub fn map_spectral(&self, f: impl Fn(&WaveIndex, usize, Complex64) -> Complex64) -> Field {
        let total = self.grid.len();
        let coeffs = self.spectral();
        let mut out = Vec::with_capacity(coeffs.len());
        for j in 0..self.components {
            for flat in 0..total {
                let mode = self.grid.wave_index(flat);
                out.push(f(&mode, j, coeffs[j * total + flat]));
            }
        }
        Field::from_spectral(self.grid, self.components, out).expect("same shape")
    }

    pub fn map_physical(&self, f: impl Fn(f64) -> f64) -> Field {
        let values = self.physical().iter().map(|&v| f(v)).collect();
        Field::from_physical(self.grid, self.components, values).expect("same shape")
    }

    /// `a·self + b·other`, computed in whichever representation both share.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field, SpectralError> {
        self.check_compatible(other)?;
        if self.has_spectral() && other.has_spectral() && !(self.has_physical() && other.has_physical()) {
            let coeffs = self
                .spectral()
                .iter()
                .zip(other.spectral())
                .map(|(x, y)| x * a + y * b)
                .collect();
            Field::from_spectral(self.grid, self.components, coeffs)
        } else {
            let values = self
                .physical()
                .iter()
                .zip(other.physical())
                .map(|(x, y)| a * x + b * y)
                .collect();
            Field::from_physical(self.grid, self.components, values)
        }
    }

    pub fn add(&self, other: &Field) -> Result<Field, SpectralError> {
        self.check_compatible(other)?;
        let values = self
            .physical()
            .iter()
            .zip(other.physical())
            .map(|(x, y)| x + y)
            .collect();
        Field::from_physical(self.grid, self.components, values)
    }

    pub fn sub(&self, other: &Field) -> Result<Field, SpectralError> {
        self.check_compatible(other)?;
        let values = self
            .physical()
            .iter()
            .zip(other.physical())
            .map(|(x, y)| x - y)
            .collect();
        Field::from_physical(self.grid, self.components, values)
    }

    pub fn scale(&self, a: f64) -> Field {
        if self.has_spectral() && !self.has_physical() {
            let coeffs = self.spectral().iter().map(|c| c * a).collect();
            Field::from_spectral(self.grid, self.components, coeffs).expect("same shape")
        } else {
            self.map_physical(|v| a * v)
        }
    }

    /// Shifts the field by whole grid cells along each axis.
    pub fn roll(&self, shift: [usize; 3]) -> Field {
        let total = self.grid.len();
        let n = self.grid.n();
        let src = self.physical();
        let mut out = vec![0.0; src.len()];
        for j in 0..self.components {
            for flat in 0..total {
                let mut idx = self.grid.unravel(flat);
                for (axis, i) in idx.iter_mut().enumerate().take(self.grid.dim()) {
                    *i = (*i + shift[axis]) % n;
                }
                out[j * total + self.grid.ravel(idx)] = src[j * total + flat];
            }
        }
        Field::from_physical(self.grid, self.components, out).expect("same shape")
    }

    /// Spatial mean of each component (the k = 0 coefficient).
    pub fn mean(&self) -> Vec<f64> {
        (0..self.components)
            .map(|j| self.component_spectral(j)[0].re)
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        if let Some(values) = self.physical.get() {
            values.iter().all(|v| v.is_finite())
        } else {
            self.spectral().iter().all(|c| c.re.is_finite() && c.im.is_finite())
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.physical().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn check_compatible(&self, other: &Field) -> Result<(), SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        if self.components != other.components {
            return Err(SpectralError::ShapeMismatch {
                expected: self.components,
                found: other.components,
            });
        }
        Ok(())
    }
}

fn check_shape(grid: &TorusGrid, components: usize, len: usize) -> Result<(), SpectralError> {
    if components == 0 || len != components * grid.len() {
        return Err(SpectralError::ShapeMismatch {
            expected: components.max(1) * grid.len(),
            found: len,
        });
    }
    Ok(())
}
