use crate::error::{Error, Result};
use crate::fields::spectral::divergence;
use crate::fields::Grid;
use crate::{ScalarField, VectorField};

/// One time slice `(t, ρ, v, P, v_t)` of a solution.
#[derive(Clone, Debug, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub v: VectorField,
    /// Zero-mean pressure.
    pub p: ScalarField,
    /// `(vⁿ⁺¹ − vⁿ)/dt`; absent at the initial time.
    pub vt: Option<VectorField>,
}

impl FluidState {
    /// Initial state with zero pressure and no time derivative.
    pub fn initial(rho: ScalarField, v: VectorField) -> Result<Self> {
        if rho.grid() != v.grid() {
            return Err(Error::GridMismatch("density and velocity grids differ".into()));
        }
        let p = ScalarField::zeros(rho.grid());
        Ok(FluidState { t: 0.0, rho, v, p, vt: None })
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid()
    }

    /// Checks `0 ≤ ρ ≤ ρ*`, zero-mean pressure, and `‖div v‖₂ ≤ tol·max(‖∇v‖₂, 1)`.
    pub fn validate(&self, rho_star: f64, div_tol: f64) -> Result<()> {
        let (lo, hi) = (self.rho.min(), self.rho.max());
        if lo < 0.0 || hi > rho_star {
            return Err(Error::Domain(format!("density range [{lo}, {hi}] outside [0, {rho_star}]")));
        }
        if self.p.mean().abs() > 1e-10 * (1.0 + self.p.l2_norm()) {
            return Err(Error::MeanViolation { mean: self.p.mean() });
        }
        let div = divergence(&self.v).l2_norm();
        let scale = crate::fields::jacobian(&self.v).iter().map(|g| g.dot(g)).sum::<f64>().sqrt();
        if div > div_tol * scale.max(1.0) {
            return Err(Error::Domain(format!("velocity divergence {div:e} exceeds tolerance")));
        }
        Ok(())
    }
}
