//! Multidimensional complex FFTs built from cached 1-D plans.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::TorusGrid;

type Plan = Arc<dyn Fft<f64>>;

static PLANS: LazyLock<Mutex<HashMap<(usize, bool), Plan>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, inverse: bool) -> Plan {
    let mut cache = PLANS.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry((n, inverse))
        .or_insert_with(|| {
            let direction = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            FftPlanner::new().plan_fft(n, direction)
        })
        .clone()
}

/// In-place transform of one component block of `grid.len()` values.
fn transform(grid: &TorusGrid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let total = grid.len();
    let dim = grid.dim();

    // The last axis is contiguous.
    for line in data.chunks_exact_mut(n) {
        fft.process_with_scratch(line, &mut scratch);
    }
    if dim == 1 {
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for offset in 0..stride {
                let start = base + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = data[start + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, value) in line.iter().enumerate() {
                    data[start + i * stride] = *value;
                }
            }
        }
    }
}

/// Physical values to normalized Fourier coefficients, `c_k = N^{-1} Σ_x f(x) e^{-ik·x}`.
pub fn forward(grid: &TorusGrid, physical: &[f64]) -> Vec<Complex64> {
    let total = grid.len();
    let scale = 1.0 / total as f64;
    let mut out: Vec<Complex64> = physical.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for block in out.chunks_exact_mut(total) {
        transform(grid, block, false);
        for c in block.iter_mut() {
            *c *= scale;
        }
    }
    out
}

/// Normalized coefficients back to (real) physical values.
pub fn inverse(grid: &TorusGrid, spectral: &[Complex64]) -> Vec<f64> {
    let total = grid.len();
    let mut work = spectral.to_vec();
    for block in work.chunks_exact_mut(total) {
        transform(grid, block, true);
    }
    work.into_iter().map(|c| c.re).collect()
}

/// Largest imaginary part produced by the inverse transform; zero up to
/// roundoff exactly when the coefficients are conjugate symmetric.
pub fn max_imaginary(grid: &TorusGrid, spectral: &[Complex64]) -> f64 {
    let total = grid.len();
    let mut work = spectral.to_vec();
    for block in work.chunks_exact_mut(total) {
        transform(grid, block, true);
    }
    work.iter().fold(0.0, |m, c| m.max(c.im.abs()))
}
