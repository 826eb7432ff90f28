//! Linear spectral operators and the pseudo-spectral advection term.

use rustfft::num_complex::Complex64;

use super::{Field, SpectralError, TorusGrid};

/// Whether the quadratic term is filtered with the two-thirds rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dealias {
    #[default]
    TwoThirds,
    Off,
}

/// `e^{aΔ}` applied mode-wise: every coefficient is multiplied by `exp(-a|k|^2)`.
pub fn heat_semigroup_apply(field: &Field, a: f64) -> Result<Field, SpectralError> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(SpectralError::InvalidArgument(format!(
            "heat semigroup time must be nonnegative and finite (got {a})"
        )));
    }
    Ok(field.map_spectral(|m, _, c| c * (-a * m.k2).exp()))
}

/// `i k_axis`, with the Nyquist bin of that axis differentiated to zero.
fn derivative_symbol(grid: &TorusGrid, flat: usize, axis: usize) -> Complex64 {
    let idx = grid.unravel(flat);
    if grid.is_nyquist(idx[axis]) {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, grid.axis_wavenumber(idx[axis]) as f64 * grid.k_scale())
}

/// `∂/∂x_axis` of every component.
pub fn partial(field: &Field, axis: usize) -> Field {
    let grid = *field.grid();
    let total = grid.len();
    let coeffs = field.spectral();
    let symbols: Vec<Complex64> = (0..total).map(|flat| derivative_symbol(&grid, flat, axis)).collect();
    let out = coeffs
        .chunks_exact(total)
        .flat_map(|block| block.iter().zip(&symbols).map(|(c, s)| c * s))
        .collect();
    Field::from_spectral(grid, field.components(), out).expect("same shape")
}

pub fn gradient(field: &Field) -> Result<Field, SpectralError> {
    if !field.is_scalar() {
        return Err(SpectralError::ShapeMismatch {
            expected: 1,
            found: field.components(),
        });
    }
    let parts: Vec<Field> = (0..field.grid().dim()).map(|axis| partial(field, axis)).collect();
    Field::stack(&parts)
}

/// Jacobian `∂_a v_j` stored with component index `j * d + a`.
pub fn jacobian(field: &Field) -> Result<Field, SpectralError> {
    let d = field.grid().dim();
    check_vector(field)?;
    let mut parts = Vec::with_capacity(d * d);
    for j in 0..d {
        let comp = field.component(j);
        for axis in 0..d {
            parts.push(partial(&comp, axis));
        }
    }
    Field::stack(&parts)
}

pub fn divergence(field: &Field) -> Result<Field, SpectralError> {
    check_vector(field)?;
    let grid = *field.grid();
    let total = grid.len();
    let coeffs = field.spectral();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for axis in 0..grid.dim() {
        let block = &coeffs[axis * total..(axis + 1) * total];
        for (flat, slot) in out.iter_mut().enumerate() {
            *slot += block[flat] * derivative_symbol(&grid, flat, axis);
        }
    }
    Field::from_spectral(grid, 1, out)
}

/// Vorticity: a scalar in 2-D, a vector in 3-D. Undefined in 1-D.
pub fn curl(field: &Field) -> Result<Field, SpectralError> {
    check_vector(field)?;
    let d = field.grid().dim();
    let comp = |j: usize| field.component(j);
    match d {
        2 => partial(&comp(1), 0).sub(&partial(&comp(0), 1)),
        3 => {
            let (u, v, w) = (comp(0), comp(1), comp(2));
            let cx = partial(&w, 1).lin_comb(1.0, &partial(&v, 2), -1.0)?;
            let cy = partial(&u, 2).lin_comb(1.0, &partial(&w, 0), -1.0)?;
            let cz = partial(&v, 0).lin_comb(1.0, &partial(&u, 1), -1.0)?;
            Field::stack(&[cx, cy, cz])
        }
        _ => Err(SpectralError::UnsupportedDimension {
            op: "curl",
            dim: d,
        }),
    }
}

/// Least-squares potential of a (numerically) curl-free vector field:
/// each component is divided by `i k_a` and the available estimates are
/// averaged per mode. The mean mode is set to zero.
pub fn antigradient(field: &Field) -> Result<Field, SpectralError> {
    check_vector(field)?;
    let grid = *field.grid();
    let total = grid.len();
    let coeffs = field.spectral();
    let mut out = vec![Complex64::new(0.0, 0.0); total];
    for (flat, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut count = 0usize;
        for axis in 0..grid.dim() {
            let sym = derivative_symbol(&grid, flat, axis);
            if sym.im != 0.0 {
                acc += coeffs[axis * total + flat] / sym;
                count += 1;
            }
        }
        if count > 0 {
            *slot = acc / count as f64;
        }
    }
    Field::from_spectral(grid, 1, out)
}

pub fn dealias(field: &Field) -> Field {
    let grid = *field.grid();
    let total = grid.len();
    let mask: Vec<bool> = (0..total).map(|flat| grid.survives_dealiasing(flat)).collect();
    let out = field
        .spectral()
        .chunks_exact(total)
        .flat_map(|block| {
            block
                .iter()
                .zip(&mask)
                .map(|(c, &keep)| if keep { *c } else { Complex64::new(0.0, 0.0) })
        })
        .collect();
    Field::from_spectral(grid, field.components(), out).expect("same shape")
}

/// `sign · (v·∇)v`, evaluated pseudo-spectrally.
///
/// With [`Dealias::TwoThirds`] the input and the product are both truncated
/// to `|k_j| <= n/3`, which makes the retained modes of the product exact.
pub fn nonlinearity(v: &Field, sign: f64, dealiasing: Dealias) -> Result<Field, SpectralError> {
    check_vector(v)?;
    let grid = *v.grid();
    let total = grid.len();
    let d = grid.dim();
    let filtered;
    let v = match dealiasing {
        Dealias::TwoThirds => {
            filtered = dealias(v);
            &filtered
        }
        Dealias::Off => v,
    };
    let jac = jacobian(v)?;
    let vals = v.physical();
    let jvals = jac.physical();
    let mut out = vec![0.0; d * total];
    for i in 0..d {
        let dst = &mut out[i * total..(i + 1) * total];
        for axis in 0..d {
            let vj = &vals[axis * total..(axis + 1) * total];
            let dvi = &jvals[(i * d + axis) * total..(i * d + axis + 1) * total];
            for ((o, a), b) in dst.iter_mut().zip(vj).zip(dvi) {
                *o += a * b;
            }
        }
        if sign != 1.0 {
            dst.iter_mut().for_each(|o| *o *= sign);
        }
    }
    let product = Field::from_physical(grid, d, out)?;
    Ok(match dealiasing {
        Dealias::TwoThirds => dealias(&product),
        Dealias::Off => product,
    })
}

fn check_vector(field: &Field) -> Result<(), SpectralError> {
    let d = field.grid().dim();
    if field.components() != d {
        return Err(SpectralError::ShapeMismatch {
            expected: d,
            found: field.components(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_err(a: &Field, b: &Field) -> f64 {
        a.physical()
            .iter()
            .zip(b.physical())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn heat_keeps_constants() {
        let g = TorusGrid::standard(2, 8).unwrap();
        let c = Field::constant(g, 1, 3.5);
        let out = heat_semigroup_apply(&c, 7.0).unwrap();
        assert!(max_err(&c, &out) < 1e-14);
    }

    #[test]
    fn heat_decays_eigenmodes() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let s1 = Field::scalar_fn(g, |x| x[0].sin());
        let out = heat_semigroup_apply(&s1, 0.1).unwrap();
        let expect = s1.scale((-0.1f64).exp());
        assert!(max_err(&out, &expect) < 1e-14);
        assert!(((-0.1f64).exp() - 0.904_837_4).abs() < 1e-7);

        let s3 = Field::scalar_fn(g, |x| (3.0 * x[0]).sin());
        let out = heat_semigroup_apply(&s3, 0.2).unwrap();
        assert!(max_err(&out, &s3.scale((-1.8f64).exp())) < 1e-14);
    }

    #[test]
    fn heat_rejects_negative_time() {
        let g = TorusGrid::standard(1, 8).unwrap();
        assert!(heat_semigroup_apply(&Field::zeros(g, 1), -1e-3).is_err());
    }

    #[test]
    fn analytic_derivatives_2d() {
        let g = TorusGrid::standard(2, 16).unwrap();
        // axis 0 is x, axis 1 is y
        let rot = Field::from_fn(g, 2, |x, j| if j == 0 { -x[1].sin() } else { x[0].sin() });
        let expect = Field::scalar_fn(g, |x| x[0].cos() + x[1].cos());
        assert!(max_err(&curl(&rot).unwrap(), &expect) < 1e-13);

        let src = Field::from_fn(g, 2, |x, j| x[j].sin());
        assert!(max_err(&divergence(&src).unwrap(), &expect) < 1e-13);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = TorusGrid::standard(3, 8).unwrap();
        let grad = gradient(&Field::constant(g, 1, 2.0)).unwrap();
        assert_eq!(grad.components(), 3);
        assert!(grad.max_abs() < 1e-14);
    }

    #[test]
    fn curl_unsupported_in_1d() {
        let g = TorusGrid::standard(1, 8).unwrap();
        assert!(matches!(
            curl(&Field::zeros(g, 1)),
            Err(SpectralError::UnsupportedDimension { .. })
        ));
    }

    #[test]
    fn nonlinearity_examples() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let v = Field::scalar_fn(g, |x| x[0].sin());
        let out = nonlinearity(&v, 1.0, Dealias::TwoThirds).unwrap();
        let expect = Field::scalar_fn(g, |x| 0.5 * (2.0 * x[0]).sin());
        assert!(max_err(&out, &expect) < 1e-14);

        let c = Field::constant(g, 1, 4.0);
        assert!(nonlinearity(&c, 1.0, Dealias::TwoThirds).unwrap().max_abs() < 1e-14);

        let g2 = TorusGrid::standard(2, 16).unwrap();
        let shear = Field::from_fn(g2, 2, |x, j| if j == 0 { x[1].sin() } else { 0.0 });
        assert!(nonlinearity(&shear, 1.0, Dealias::TwoThirds).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn nonlinearity_sign_flips() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let v = Field::scalar_fn(g, |x| x[0].sin() + 0.3 * (2.0 * x[0]).cos());
        let plus = nonlinearity(&v, 1.0, Dealias::TwoThirds).unwrap();
        let minus = nonlinearity(&v, -1.0, Dealias::TwoThirds).unwrap();
        assert!(max_err(&plus, &minus.scale(-1.0)) < 1e-15);
    }

    #[test]
    fn dealiasing_removes_upper_third() {
        let g = TorusGrid::standard(1, 32).unwrap();
        let v = Field::scalar_fn(g, |x| (12.0 * x[0]).cos() + x[0].cos());
        let out = dealias(&v);
        let expect = Field::scalar_fn(g, |x| x[0].cos());
        assert!(max_err(&out, &expect) < 1e-14);
    }

    #[test]
    fn antigradient_inverts_gradient() {
        let g = TorusGrid::standard(2, 16).unwrap();
        let psi = Field::scalar_fn(g, |x| x[0].cos() + (x[1] + 2.0 * x[0]).sin());
        let back = antigradient(&gradient(&psi).unwrap()).unwrap();
        assert!(max_err(&back, &psi) < 1e-13);
    }
}
