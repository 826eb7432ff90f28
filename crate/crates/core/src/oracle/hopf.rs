use crate::spectral::{curl, gradient, heat_semigroup_apply, linf_norm, Field};

use super::OracleError;

/// Potential `ψ` together with the velocity `u = ∇ψ` it induces.
#[derive(Debug, Clone)]
pub struct PotentialState {
    pub psi: Field,
    pub u: Field,
    pub nu: f64,
    /// Coefficient of `|∇ψ|^2` in `ψ_t = νΔψ + c|∇ψ|^2 + U`.
    pub c: f64,
}

impl PotentialState {
    /// `|curl u|_∞`, zero in 1-D.
    pub fn curl_inf(&self) -> Result<f64, OracleError> {
        if self.u.grid().dim() == 1 {
            return Ok(0.0);
        }
        Ok(linf_norm(&curl(&self.u)?))
    }
}

/// Coefficient `c` of `|∇ψ|^2` matching the Burgers sign `s`.
///
/// For `u = ∇ψ`, `(u·∇)u = ½∇|∇ψ|^2`, so `u_t = νΔu + s(u·∇)u` lifts to
/// `ψ_t = νΔψ + (s/2)|∇ψ|^2`. An explicit override replaces this.
pub fn hj_coefficient(sign: f64, factor_override: Option<f64>) -> f64 {
    factor_override.unwrap_or(sign / 2.0)
}

/// Solves `ψ_t = νΔψ + c|∇ψ|^2 + U` through `w = exp(cψ/ν)`, which obeys
/// `w_t = νΔw + (cU/ν) w`.
///
/// Without a potential the heat flow of `w` is applied exactly. With one,
/// Strang splitting (half potential steps around spectral heat steps of
/// length `split_dt` or less) is used. `w` is renormalized by its maximum
/// before and during the flow; `ψ` recovers the shifts exactly.
pub fn hopf_cole_solve(
    psi0: &Field,
    nu: f64,
    potential: Option<&Field>,
    t: f64,
    c: f64,
    split_dt: f64,
) -> Result<PotentialState, OracleError> {
    if !(nu > 0.0) {
        return Err(OracleError::InvalidArgument(format!("nu must be positive (got {nu})")));
    }
    if c == 0.0 || !c.is_finite() {
        return Err(OracleError::InvalidArgument("Hopf–Cole coefficient must be nonzero".into()));
    }
    if !(t >= 0.0) {
        return Err(OracleError::InvalidArgument(format!("time must be nonnegative (got {t})")));
    }
    if !psi0.is_scalar() {
        return Err(OracleError::InvalidArgument("potential must be a scalar field".into()));
    }
    let grid = *psi0.grid();

    let exponent: Vec<f64> = psi0.physical().iter().map(|&p| c * p / nu).collect();
    let mut shift = exponent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w = Field::from_physical(grid, 1, exponent.iter().map(|e| (e - shift).exp()).collect())?;

    match potential {
        None => {
            w = heat_semigroup_apply(&w, nu * t)?;
        }
        Some(u_pot) => {
            if u_pot.grid() != psi0.grid() || !u_pot.is_scalar() {
                return Err(OracleError::InvalidArgument(
                    "forcing potential must be a scalar on the same grid".into(),
                ));
            }
            if !(split_dt > 0.0) {
                return Err(OracleError::InvalidArgument("splitting step must be positive".into()));
            }
            let steps = (t / split_dt).ceil().max(1.0) as usize;
            let h = t / steps as f64;
            let half: Vec<f64> = u_pot.physical().iter().map(|&v| (c * v / nu * 0.5 * h).exp()).collect();
            for _ in 0..steps {
                let kicked: Vec<f64> = w.physical().iter().zip(&half).map(|(a, b)| a * b).collect();
                let flowed = heat_semigroup_apply(&Field::from_physical(grid, 1, kicked)?, nu * h)?;
                let mut vals: Vec<f64> = flowed.physical().iter().zip(&half).map(|(a, b)| a * b).collect();
                let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if !(top > 0.0) || !top.is_finite() {
                    return Err(OracleError::OracleFailure(format!(
                        "transformed field lost positivity (max = {top})"
                    )));
                }
                vals.iter_mut().for_each(|v| *v /= top);
                shift += top.ln();
                w = Field::from_physical(grid, 1, vals)?;
            }
        }
    }

    let wv = w.physical();
    if let Some(bad) = wv.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(OracleError::OracleFailure(format!(
            "transformed field is not positive ({bad}); resolution too coarse"
        )));
    }
    if !shift.is_finite() {
        return Err(OracleError::OracleFailure("exponent overflow".into()));
    }
    let psi = Field::from_physical(grid, 1, wv.iter().map(|v| nu / c * (v.ln() + shift)).collect())?;
    let u = gradient(&psi)?;
    Ok(PotentialState { psi, u, nu, c })
}

/// Viscosity solution of `ψ_t = c|∇ψ|^2` by exhaustive search over grid
/// points `y`:
///
/// * `c > 0`: `ψ(t,x) = max_y [ψ0(y) - d(x,y)^2 / (4ct)]`
/// * `c < 0`: `ψ(t,x) = min_y [ψ0(y) + d(x,y)^2 / (4|c|t)]`
///
/// with `d` the minimal-image torus distance.
pub fn hopf_lax_solve(psi0: &Field, t: f64, c: f64) -> Result<Field, OracleError> {
    if !(t > 0.0) {
        return Err(OracleError::InvalidArgument(format!("time must be positive (got {t})")));
    }
    if c == 0.0 || !c.is_finite() {
        return Err(OracleError::InvalidArgument("Hamiltonian coefficient must be nonzero".into()));
    }
    if !psi0.is_scalar() {
        return Err(OracleError::InvalidArgument("potential must be a scalar field".into()));
    }
    let grid = *psi0.grid();
    let total = grid.len();
    let values = psi0.physical();
    let coords: Vec<[f64; 3]> = (0..total).map(|i| grid.coords(i)).collect();
    let scale = 1.0 / (4.0 * c.abs() * t);
    let out = coords
        .iter()
        .map(|x| {
            if c > 0.0 {
                coords
                    .iter()
                    .zip(values)
                    .map(|(y, v)| v - grid.torus_distance_sq(x, y) * scale)
                    .fold(f64::NEG_INFINITY, f64::max)
            } else {
                coords
                    .iter()
                    .zip(values)
                    .map(|(y, v)| v + grid.torus_distance_sq(x, y) * scale)
                    .fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    Ok(Field::from_physical(grid, 1, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::OracleError;
    use crate::spectral::{lp_norm, TorusGrid};

    fn g1(n: usize) -> TorusGrid {
        TorusGrid::standard(1, n).unwrap()
    }

    #[test]
    fn coefficient_follows_sign() {
        assert_eq!(hj_coefficient(-1.0, None), -0.5);
        assert_eq!(hj_coefficient(1.0, None), 0.5);
        assert_eq!(hj_coefficient(-1.0, Some(-1.0)), -1.0);
    }

    #[test]
    fn constant_potential_is_fixed() {
        let g = g1(32);
        let psi0 = Field::constant(g, 1, 2.5);
        let s = hopf_cole_solve(&psi0, 0.1, None, 1.0, -0.5, 1e-3).unwrap();
        assert!(s.psi.physical().iter().all(|v| (v - 2.5).abs() < 1e-12));
        assert!(s.u.max_abs() < 1e-12);
    }

    #[test]
    fn constant_forcing_adds_linearly() {
        let g = g1(32);
        let psi0 = Field::constant(g, 1, 1.0);
        let pot = Field::constant(g, 1, 0.3);
        let s = hopf_cole_solve(&psi0, 0.2, Some(&pot), 2.0, 0.5, 1e-2).unwrap();
        assert!(s.psi.physical().iter().all(|v| (v - 1.6).abs() < 1e-12));
    }

    #[test]
    fn long_time_flattens() {
        let g = g1(64);
        let psi0 = Field::scalar_fn(g, |x| x[0].cos());
        // leading Bessel mode: |u| ~ 2 (I_1(1)/I_0(1)) e^{-νt}
        let s = hopf_cole_solve(&psi0, 0.5, None, 20.0, -0.5, 1e-3).unwrap();
        let predicted = 2.0 * 0.446_389_965_896_534_5 * (-10.0f64).exp();
        assert!((s.u.max_abs() - predicted).abs() < 1e-2 * predicted);
        let later = hopf_cole_solve(&psi0, 0.5, None, 40.0, -0.5, 1e-3).unwrap();
        assert!(later.u.max_abs() <= 1e-6);
    }

    #[test]
    fn shift_invariance() {
        let g = g1(64);
        let psi0 = Field::scalar_fn(g, |x| x[0].cos() + 0.3 * (2.0 * x[0]).sin());
        let shifted = psi0.map_physical(|v| v + 7.0);
        let a = hopf_cole_solve(&psi0, 0.1, None, 0.5, -0.5, 1e-3).unwrap();
        let b = hopf_cole_solve(&shifted, 0.1, None, 0.5, -0.5, 1e-3).unwrap();
        for (x, y) in a.psi.physical().iter().zip(b.psi.physical()) {
            assert!((y - x - 7.0).abs() < 1e-10);
        }
        let du = lp_norm(&a.u.sub(&b.u).unwrap(), 2.0).unwrap();
        assert!(du < 1e-10 * lp_norm(&a.u, 2.0).unwrap());
    }

    #[test]
    fn large_exponents_are_rescaled() {
        let g = g1(256);
        // exp(c ψ0 / ν) alone would underflow to zero everywhere
        let psi0 = Field::scalar_fn(g, |x| 1000.0 + x[0].cos());
        let s = hopf_cole_solve(&psi0, 0.05, None, 0.1, -0.5, 1e-3).unwrap();
        assert!(s.psi.is_finite());
        assert!(s.psi.physical().iter().all(|v| (v - 1000.0).abs() <= 1.0 + 1e-9));
    }

    #[test]
    fn unresolvable_viscosity_is_reported() {
        let g = g1(256);
        let psi0 = Field::scalar_fn(g, |x| x[0].cos());
        assert!(matches!(
            hopf_cole_solve(&psi0, 1e-3, None, 0.1, -0.5, 1e-3),
            Err(OracleError::OracleFailure(_))
        ));
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = g1(16);
        let psi0 = Field::zeros(g, 1);
        assert!(hopf_cole_solve(&psi0, 0.0, None, 1.0, -0.5, 1e-3).is_err());
        assert!(hopf_cole_solve(&psi0, 0.1, None, 1.0, 0.0, 1e-3).is_err());
        assert!(hopf_lax_solve(&psi0, 0.0, -0.5).is_err());
    }

    #[test]
    fn hopf_lax_constant_and_ordering() {
        let g = g1(64);
        let c = Field::constant(g, 1, 1.25);
        let out = hopf_lax_solve(&c, 0.7, -0.5).unwrap();
        assert!(out.physical().iter().all(|v| *v == 1.25));

        let psi0 = Field::scalar_fn(g, |x| x[0].cos());
        let inf = hopf_lax_solve(&psi0, 0.05, -0.5).unwrap();
        assert!(inf.physical().iter().zip(psi0.physical()).all(|(a, b)| a <= b));
        let sup = hopf_lax_solve(&psi0, 0.05, 0.5).unwrap();
        assert!(sup.physical().iter().zip(psi0.physical()).all(|(a, b)| a >= b));
    }

    #[test]
    fn gradient_data_stays_curl_free() {
        let g = TorusGrid::standard(2, 32).unwrap();
        let psi0 = Field::scalar_fn(g, |x| x[0].cos() + (x[1] - x[0]).sin());
        let s = hopf_cole_solve(&psi0, 0.2, None, 0.3, -0.5, 1e-3).unwrap();
        assert!(s.curl_inf().unwrap() < 1e-10 * s.u.max_abs());
    }
}
