use crate::noise::ZNorms;

use super::EstimateError;

/// Running functionals of a `z` path up to a time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZSummary {
    pub t: f64,
    /// `sup_{s<=t} |z(s)|_{H^{2,p}}`
    pub sup_sob2: f64,
    /// `sup_{s<=t} |z(s)|_{H^{3,p}}`
    pub sup_sob3: f64,
    /// Left-endpoint sum for `∫_0^t |∇z(s)|_∞ ds`.
    pub int_grad_inf: f64,
    /// Left-endpoint sum for `∫_0^t |F(z(s))|_{L^p} ds`.
    pub int_advection: f64,
}

impl ZSummary {
    /// Summary after every sample of `path`; entry `i` covers `[0, path[i].t]`.
    pub fn series(path: &[ZNorms]) -> Vec<ZSummary> {
        let mut out = Vec::with_capacity(path.len());
        let mut acc = ZSummary::default();
        for (i, z) in path.iter().enumerate() {
            if i > 0 {
                let prev = &path[i - 1];
                let h = z.t - prev.t;
                acc.int_grad_inf += prev.grad_inf * h;
                acc.int_advection += prev.advection_lp * h;
            }
            acc.t = z.t;
            acc.sup_sob2 = acc.sup_sob2.max(z.sob2);
            acc.sup_sob3 = acc.sup_sob3.max(z.sob3);
            out.push(acc);
        }
        out
    }

    /// Summary over `[0, t]`, which the samples must reach.
    pub fn upto(path: &[ZNorms], t: f64) -> Result<ZSummary, EstimateError> {
        let last = path
            .last()
            .ok_or_else(|| EstimateError::InvalidArgument("empty z path".into()))?;
        let tol = 1e-9 * t.abs().max(1.0);
        if last.t < t - tol || path[0].t > tol {
            return Err(EstimateError::InvalidArgument(format!(
                "z path covers [{}, {}], not [0, {t}]",
                path[0].t, last.t
            )));
        }
        let n = path.iter().take_while(|z| z.t <= t + tol).count();
        Ok(*ZSummary::series(&path[..n]).last().expect("nonempty prefix"))
    }
}

/// `C (|u0|_p^p + sup|z|^2_{H^{2,p}}) exp(∫|∇z|_∞)`.
pub fn torus_rhs(u0_lp: f64, z: &ZSummary, p: f64, c: f64) -> f64 {
    c * (u0_lp.powf(p) + z.sup_sob2.powi(2)) * z.int_grad_inf.exp()
}

/// `(|v(0)|_{H^{1,p}} + sup|z|^2_{H^{2,p}}) exp(t + ∫|∇z|_∞)`, the pointwise
/// bound on `v` used inside the torus argument.
pub fn sup_norm_rhs(v0_sob1: f64, z: &ZSummary) -> f64 {
    (v0_sob1 + z.sup_sob2.powi(2)) * (z.t + z.int_grad_inf).exp()
}

/// The whole-space bound, evaluated on torus data:
///
/// `(|u0|^p + ∫|F(z)|_p) exp{(p+1) t S + (p-1) t + (2t/(νp)) (C|u0|^{2p} + S^4) e^{2tS}}`
///
/// with `S = sup|z|_{H^{2,p}}`.
pub fn rd_rhs(u0_lp: f64, z: &ZSummary, p: f64, nu: f64, c: f64) -> Result<f64, EstimateError> {
    if nu == 0.0 {
        return Err(EstimateError::ZeroViscosity);
    }
    let t = z.t;
    let s = z.sup_sob2;
    let exponent = (p + 1.0) * t * s
        + (p - 1.0) * t
        + 2.0 * t / (nu * p) * (c * u0_lp.powf(2.0 * p) + s.powi(4)) * (2.0 * t * s).exp();
    Ok((u0_lp.powf(p) + z.int_advection) * exponent.exp())
}

/// Torus a priori bound at time `t` for the path `z`.
pub fn torus_apriori_rhs(u0_lp: f64, z: &[ZNorms], t: f64, p: f64, c: f64) -> Result<f64, EstimateError> {
    Ok(torus_rhs(u0_lp, &ZSummary::upto(z, t)?, p, c))
}

/// Whole-space a priori bound at time `t`; `ν = 0` is rejected.
pub fn rd_apriori_rhs(u0_lp: f64, z: &[ZNorms], t: f64, p: f64, nu: f64, c: f64) -> Result<f64, EstimateError> {
    rd_rhs(u0_lp, &ZSummary::upto(z, t)?, p, nu, c)
}

/// `lhs / rhs`, with `0/0` read as 1.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        1.0
    } else {
        lhs / rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zn(t: f64, sob2: f64, grad: f64, adv: f64) -> ZNorms {
        ZNorms {
            t,
            sob2,
            sob3: 2.0 * sob2,
            grad_inf: grad,
            advection_lp: adv,
            ..ZNorms::default()
        }
    }

    #[test]
    fn zero_path_reduces_to_initial_norm() {
        let path: Vec<ZNorms> = (0..=10).map(|i| zn(i as f64 * 0.1, 0.0, 0.0, 0.0)).collect();
        for t in [0.0, 0.5, 1.0] {
            let r = torus_apriori_rhs(1.5, &path, t, 2.0, 3.0).unwrap();
            assert!((r - 3.0 * 2.25).abs() < 1e-14);
        }
        assert_eq!(torus_apriori_rhs(0.0, &path, 1.0, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(rd_apriori_rhs(0.0, &path, 1.0, 2.0, 0.1, 1.0).unwrap(), 0.0);
        assert_eq!(ratio(0.0, 0.0), 1.0);
    }

    #[test]
    fn left_endpoint_sums() {
        let path = vec![zn(0.0, 0.1, 1.0, 2.0), zn(0.5, 0.3, 3.0, 4.0), zn(1.0, 0.2, 5.0, 6.0)];
        let s = ZSummary::upto(&path, 1.0).unwrap();
        assert!((s.int_grad_inf - 2.0).abs() < 1e-15);
        assert!((s.int_advection - 3.0).abs() < 1e-15);
        assert_eq!(s.sup_sob2, 0.3);
        assert_eq!(s.sup_sob3, 0.6);
        let half = ZSummary::upto(&path, 0.5).unwrap();
        assert!((half.int_grad_inf - 0.5).abs() < 1e-15);
        assert!(ZSummary::upto(&path, 1.5).is_err());
    }

    #[test]
    fn torus_bound_is_monotone_in_time() {
        let path: Vec<ZNorms> = (0..=50)
            .map(|i| {
                let t = i as f64 * 0.02;
                zn(t, (3.0 * t).sin().abs(), (5.0 * t).cos().abs(), 0.1)
            })
            .collect();
        let series = ZSummary::series(&path);
        for w in series.windows(2) {
            assert!(torus_rhs(0.7, &w[1], 2.0, 1.0) >= torus_rhs(0.7, &w[0], 2.0, 1.0));
        }
    }

    #[test]
    fn rd_bound_grows_as_viscosity_shrinks() {
        let path = vec![zn(0.0, 0.0, 0.0, 0.0), zn(0.5, 0.2, 0.3, 0.1), zn(1.0, 0.1, 0.3, 0.1)];
        let mut prev = 0.0;
        for nu in [0.4, 0.2, 0.1, 0.05] {
            let r = rd_apriori_rhs(1.0, &path, 1.0, 2.0, nu, 1.0).unwrap();
            assert!(r > prev);
            prev = r;
        }
        assert!(matches!(
            rd_apriori_rhs(1.0, &path, 1.0, 2.0, 0.0, 1.0),
            Err(EstimateError::ZeroViscosity)
        ));
    }

    #[test]
    fn rd_formula_by_hand() {
        let path = vec![zn(0.0, 0.5, 0.0, 1.0), zn(2.0, 0.5, 0.0, 1.0)];
        let s = ZSummary::upto(&path, 2.0).unwrap();
        // (1 + 2) exp{3·2·0.5 + 2 + (4/0.2)(1 + 1/16) e^{2}}
        let expect = 3.0 * (3.0 + 2.0 + 20.0 * (1.0 + 0.0625) * 2f64.exp()).exp();
        let got = rd_rhs(1.0, &s, 2.0, 0.1, 1.0).unwrap();
        assert!((got - expect).abs() <= 1e-12 * expect);
    }
}
