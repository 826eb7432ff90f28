use super::{Field, SpectralError};

/// Pointwise Euclidean magnitude of a (possibly vector) field, one value per grid point.
pub fn pointwise_magnitude(field: &Field) -> Vec<f64> {
    let total = field.grid().len();
    let values = field.physical();
    if field.is_scalar() {
        return values.iter().map(|v| v.abs()).collect();
    }
    (0..total)
        .map(|x| {
            (0..field.components())
                .map(|j| values[j * total + x].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// `(Σ_x |f(x)|^p h^d)^{1/p}`: rectangle rule on the periodic grid.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64, SpectralError> {
    if !(p >= 1.0) {
        return Err(SpectralError::InvalidArgument(format!(
            "Lebesgue exponent must be >= 1 (got {p})"
        )));
    }
    let cell = field.grid().cell_volume();
    let mags = pointwise_magnitude(field);
    if p.is_infinite() {
        return Ok(mags.iter().fold(0.0, |m: f64, v| m.max(*v)));
    }
    let sum = if p == 2.0 {
        pairwise_sum(&mags.iter().map(|v| v * v).collect::<Vec<_>>())
    } else {
        pairwise_sum(&mags.iter().map(|v| v.powf(p)).collect::<Vec<_>>())
    };
    Ok((sum * cell).powf(1.0 / p))
}

/// `|(I - Δ)^{order/2} f|_{L^p}`.
pub fn sobolev_norm(field: &Field, order: u32, p: f64) -> Result<f64, SpectralError> {
    if order == 0 {
        return lp_norm(field, p);
    }
    let half = order as f64 / 2.0;
    let lifted = field.map_spectral(|m, _, c| c * (1.0 + m.k2).powf(half));
    lp_norm(&lifted, p)
}

pub fn linf_norm(field: &Field) -> f64 {
    pointwise_magnitude(field).into_iter().fold(0.0, f64::max)
}

/// `L^2` norm from the coefficients: `(|T^d| Σ_k |c_k|^2)^{1/2}`.
pub fn spectral_l2_norm(field: &Field) -> f64 {
    let sq: Vec<f64> = field.spectral().iter().map(|c| c.norm_sqr()).collect();
    (pairwise_sum(&sq) * field.grid().volume()).sqrt()
}

/// Fixed-order pairwise summation; the result does not depend on how the
/// caller was scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
