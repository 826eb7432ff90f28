use crate::spectral::Dealias;

use super::SolverError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    /// Exponential Euler on the mild form.
    #[default]
    Etd1,
    /// Fixed point of the trapezoidal mild equation, solved window by window.
    Picard,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Etd1 => "etd1",
            Scheme::Picard => "picard",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nu: f64,
    pub p: f64,
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// `None` selects `10^6 (1 + |u0|_{L^p})`; `Some(∞)` disables the guard.
    pub blowup_threshold: Option<f64>,
    /// Coefficient `s` of `(u·∇)u`; `+1` or `-1`.
    pub sign: f64,
    pub dealias: Dealias,
    /// Drop the advection term entirely (pure heat flow for `v`).
    pub linear_only: bool,
    /// Constant `c` of the local-existence window `min(100 dt, c / (1 + |u|_p^2))`.
    pub window_constant: f64,
    /// Keep a `(v, z)` snapshot every this many steps; 0 keeps only the ends.
    pub snapshot_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu: 0.1,
            p: 2.0,
            dt: 1e-3,
            t_final: 1.0,
            scheme: Scheme::Etd1,
            picard_tol: 1e-11,
            picard_max_iter: 50,
            blowup_threshold: None,
            sign: 1.0,
            dealias: Dealias::TwoThirds,
            linear_only: false,
            window_constant: 0.1,
            snapshot_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self, dim: usize) -> Result<(), SolverError> {
        let fail = |msg: String| Err(SolverError::InvalidConfig(msg));
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return fail(format!("nu must be positive (got {})", self.nu));
        }
        if !(self.p > dim as f64) {
            return fail(format!("p must exceed d = {dim} (got {})", self.p));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return fail(format!("dt must be positive (got {})", self.dt));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return fail(format!("T must be positive (got {})", self.t_final));
        }
        if !(self.picard_tol > 0.0) {
            return fail(format!("picard tolerance must be positive (got {})", self.picard_tol));
        }
        if self.picard_max_iter == 0 {
            return fail("picard iteration cap must be at least 1".into());
        }
        if let Some(b) = self.blowup_threshold {
            if !(b > 0.0) {
                return fail(format!("blow-up threshold must be positive (got {b})"));
            }
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return fail(format!("nonlinearity sign must be +1 or -1 (got {})", self.sign));
        }
        if !(self.window_constant > 0.0) {
            return fail("window constant must be positive".into());
        }
        Ok(())
    }

    pub fn steps(&self) -> Result<usize, SolverError> {
        Ok(crate::noise::step_count(self.t_final, self.dt)?)
    }

    pub fn threshold_for(&self, u0_lp: f64) -> f64 {
        self.blowup_threshold.unwrap_or(1e6 * (1.0 + u0_lp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_in_1d() {
        assert!(SolverConfig::default().validate(1).is_ok());
    }

    #[test]
    fn rejects_p_not_above_dimension() {
        let cfg = SolverConfig::default();
        assert!(cfg.validate(2).is_err());
        let cfg = SolverConfig { p: 3.0, ..cfg };
        assert!(cfg.validate(2).is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        let base = SolverConfig::default();
        for bad in [
            SolverConfig { nu: 0.0, ..base.clone() },
            SolverConfig { dt: -1.0, ..base.clone() },
            SolverConfig { sign: 0.5, ..base.clone() },
            SolverConfig { picard_tol: 0.0, ..base.clone() },
            SolverConfig { blowup_threshold: Some(0.0), ..base.clone() },
        ] {
            assert!(bad.validate(1).is_err());
        }
    }

    #[test]
    fn default_threshold_scales_with_data() {
        let cfg = SolverConfig::default();
        assert_eq!(cfg.threshold_for(1.0), 2e6);
        let cfg = SolverConfig { blowup_threshold: Some(f64::INFINITY), ..cfg };
        assert_eq!(cfg.threshold_for(1.0), f64::INFINITY);
    }
}
