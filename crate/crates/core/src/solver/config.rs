use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inner solver for the variable-density Stokes system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    /// Conjugate gradients on divergence-free fields, preconditioned by the
    /// constant-coefficient Stokes operator with pivot `mean(ρ̃)`.
    #[default]
    Cg,
    /// Plain fixed point `v ← S⁻¹(b − P((ρ̃ − ρ̄)v)/dt)` with the same pivot.
    Richardson,
}

/// Treatment of the inertial term when forming the explicit velocity `ṽ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VelocityAdvection {
    /// `ṽ = v − dt·(v·∇v)` with the product dealiased by the 2/3 rule.
    #[default]
    Spectral,
    /// `ṽ(x) = v(X⁻ᵈᵗ(x))` by unclipped cubic interpolation.
    SemiLagrangian,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub mu: f64,
    pub dt: f64,
    pub eps_floor: f64,
    pub rho_star: f64,
    pub n: usize,
    pub inner_tol: f64,
    pub inner_maxit: usize,
    pub t_end: f64,
    /// Advective Courant number `dt·‖v‖_∞/h` above which a warning is logged.
    pub cfl_limit: f64,
    pub inner_method: InnerMethod,
    pub velocity_advection: VelocityAdvection,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            mu: 0.01,
            dt: 1e-3,
            eps_floor: 1e-3,
            rho_star: 1.0,
            n: 128,
            inner_tol: 1e-8,
            inner_maxit: 500,
            t_end: 0.5,
            cfl_limit: 1.0,
            inner_method: InnerMethod::Cg,
            velocity_advection: VelocityAdvection::Spectral,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Domain(msg));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if !(self.rho_star > 0.0 && self.rho_star.is_finite()) {
            return bad(format!("rho_star = {} must be positive", self.rho_star));
        }
        if !(self.eps_floor >= 0.0 && self.eps_floor <= self.rho_star) {
            return bad(format!("eps_floor = {} must lie in [0, rho_star]", self.eps_floor));
        }
        if self.n < 8 || !self.n.is_power_of_two() {
            return bad(format!("n = {} must be a power of two and at least 8", self.n));
        }
        if !(self.inner_tol > 0.0) || self.inner_maxit == 0 {
            return bad("inner_tol and inner_maxit must be positive".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be nonnegative", self.t_end));
        }
        if !(self.cfl_limit > 0.0) {
            return bad(format!("cfl_limit = {} must be positive", self.cfl_limit));
        }
        Ok(())
    }

    /// Number of steps needed to reach `t_end`, rounding to the nearest integer.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SolverConfig::default().validate().unwrap();
        assert_eq!(SolverConfig::default().steps(), 500);
    }

    #[test]
    fn floor_outside_range_is_rejected() {
        let cfg = SolverConfig { eps_floor: -1.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { eps_floor: 2.0, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = SolverConfig { dt: 0.0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
