use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::fields::{fourier_truncate, hs_seminorm};
use crate::ScalarField;

/// `‖∇z‖₂` with the exact symbol on every mode.
fn grad_l2(z: &ScalarField) -> f64 {
    hs_seminorm(z, 1.0).expect("order 1 is valid")
}

fn weight_mass(a: &ScalarField) -> Result<f64> {
    if a.min() < 0.0 {
        return Err(Error::DegenerateWeight(format!("weight takes the negative value {}", a.min())));
    }
    let m = a.integral();
    if m <= 0.0 {
        return Err(Error::DegenerateWeight("weight has zero mass".into()));
    }
    Ok(m)
}

/// `‖M − a‖₂`
fn deviation(a: &ScalarField, m: f64) -> f64 {
    a.map(|v| v - m).l2_norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }

    /// `lhs/rhs`, or `None` when the right side vanishes.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

/// `‖z‖₂` against `(1/M)|∫az| + (1 + ‖M − a‖₂/M)‖∇z‖₂`.
pub fn weighted_poincare_check(a: &ScalarField, z: &ScalarField) -> Result<Sides> {
    let m = weight_mass(a)?;
    let az = a.zip_map(z, |x, y| x * y).integral();
    let rhs = az.abs() / m + (1.0 + deviation(a, m) / m) * grad_l2(z);
    Ok(Sides { lhs: z.l2_norm(), rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPoincare {
    /// `‖z‖₂ − (1/M)|∫az|`
    pub lhs: f64,
    /// `log^{1/2}(e + ‖a − M‖₂/M)‖∇z‖₂`
    pub rhs_without_c: f64,
    /// `lhs/rhs_without_c`; `None` when `lhs ≤ 0` or the right side vanishes.
    pub ratio: Option<f64>,
}

pub fn log_poincare_check(a: &ScalarField, z: &ScalarField) -> Result<LogPoincare> {
    let m = weight_mass(a)?;
    let lhs = z.l2_norm() - a.zip_map(z, |x, y| x * y).integral().abs() / m;
    let rhs_without_c = (E + deviation(a, m) / m).ln().sqrt() * grad_l2(z);
    let ratio = (lhs > 0.0 && rhs_without_c > 0.0).then(|| lhs / rhs_without_c);
    Ok(LogPoincare { lhs, rhs_without_c, ratio })
}

/// `‖z‖₄²/(‖z‖₂‖∇z‖₂)`
pub fn ladyzhenskaya_ratio(z: &ScalarField) -> Result<f64> {
    let g = grad_l2(z);
    let l2 = z.l2_norm();
    if g <= 1e-14 * l2 || l2 == 0.0 {
        return Err(Error::Degenerate("constant field has no Ladyzhenskaya ratio".into()));
    }
    Ok(z.lp_norm(4.0)?.powi(2) / (l2 * g))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Desjardins {
    /// `(∫ρz⁴)^{1/2}`
    pub lhs: f64,
    /// `‖√ρz‖₂‖∇z‖₂ log^{1/2}(e + ‖ρ − M‖₂²/M² + ρ*‖∇z‖₂²/‖√ρz‖₂²)`
    pub rhs_core: f64,
    /// `‖√ρz‖₂|z̄|`
    pub mean_term: f64,
    /// `lhs/(rhs_core + mean_term)`
    pub ratio: f64,
    /// `lhs/rhs_core`; infinite when `∇z = 0` and `lhs > 0`.
    pub core_ratio: f64,
}

pub fn desjardins_check(rho: &ScalarField, z: &ScalarField, rho_star: f64) -> Result<Desjardins> {
    let m = weight_mass(rho)?;
    if rho.max() > rho_star {
        return Err(Error::Domain(format!("density {} above rho_star = {rho_star}", rho.max())));
    }
    let w = rho.zip_map(z, |r, v| r * v * v).integral().sqrt();
    if w <= 0.0 {
        return Err(Error::VacuumSupport);
    }
    let lhs = rho.zip_map(z, |r, v| r * v.powi(4)).integral().sqrt();
    let g = grad_l2(z);
    let dev = deviation(rho, m) / m;
    let log = (E + dev * dev + rho_star * g * g / (w * w)).ln().sqrt();
    let rhs_core = w * g * log;
    let mean_term = w * z.mean().abs();
    let core_ratio = if rhs_core > 0.0 { lhs / rhs_core } else { f64::INFINITY };
    Ok(Desjardins { lhs, rhs_core, mean_term, ratio: lhs / (rhs_core + mean_term), core_ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationBounds {
    /// Nodal `‖z̃_n‖_∞` of the modes `1 ≤ |k| ≤ n`.
    pub linf_low: f64,
    /// `(Σ_{1≤|k|≤n} 1/(4π²|k|²))^{1/2}‖∇z‖₂`
    pub sqrtlog_bound: f64,
    /// `‖z̃ − z̃_n‖_{Ḣ^{1/2}}`
    pub tail_hhalf: f64,
    /// `(2πn)^{−1/2}‖∇z‖₂`
    pub tail_bound: f64,
}

/// `Σ_{1≤|k|≤n} 1/(4π²|k|²)` over the integer lattice of the plane.
pub fn lattice_sum(n: usize) -> f64 {
    let n = n as i64;
    let mut sum = 0.0;
    for k1 in -n..=n {
        for k2 in -n..=n {
            let k2sum = k1 * k1 + k2 * k2;
            if k2sum >= 1 && k2sum <= n * n {
                sum += 1.0 / (4.0 * PI * PI * k2sum as f64);
            }
        }
    }
    sum
}

pub fn truncation_bounds(z: &ScalarField, n: usize) -> Result<TruncationBounds> {
    if z.grid().d() != 2 || n < 2 {
        return Err(Error::Domain(format!("truncation needs d = 2 and n ≥ 2, got d = {}, n = {n}", z.grid().d())));
    }
    let split = fourier_truncate(z, n)?;
    let g = grad_l2(z);
    Ok(TruncationBounds {
        linf_low: split.low.lp_norm(f64::INFINITY)?,
        sqrtlog_bound: lattice_sum(n).sqrt() * g,
        tail_hhalf: hs_seminorm(&split.high, 0.5)?,
        tail_bound: g / (2.0 * PI * n as f64).sqrt(),
    })
}
