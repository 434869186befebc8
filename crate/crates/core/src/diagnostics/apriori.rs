use serde::{Deserialize, Serialize};
use std::f64::consts::E;

use crate::diagnostics::record::Trajectory;
use crate::error::{Error, Result};

/// One `(p, r, s)` row of the shift-of-integrability table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftTriple {
    /// Time exponent of `‖√t ∇²v‖_{L_p(0,T;L_r)}`; `f64::INFINITY` for the sup.
    pub p: f64,
    pub r: f64,
    /// Exponent of `∫₀ᵀ‖∇v‖_∞ˢ`.
    pub s: f64,
}

impl ShiftTriple {
    /// `(2p − 2s − ps)/(2ps)`; for `p = ∞` the limit `(2 − s)/(2s)`.
    pub fn beta(&self) -> f64 {
        let (p, s) = (self.p, self.s);
        if p.is_infinite() {
            (2.0 - s) / (2.0 * s)
        } else {
            (2.0 * p - 2.0 * s - p * s) / (2.0 * p * s)
        }
    }

    /// Reasons the triple lies outside the two-dimensional admissible ranges.
    pub fn range_notes(&self) -> Vec<String> {
        let (p, r, s) = (self.p, self.r, self.s);
        let mut notes = Vec::new();
        if p < 2.0 {
            notes.push(format!("p = {p} < 2"));
        }
        let p_star = if p == 2.0 {
            f64::INFINITY
        } else if p.is_infinite() {
            2.0
        } else {
            2.0 * p / (p - 2.0)
        };
        if !(r >= 2.0 && r < p_star) {
            notes.push(format!("r = {r} outside [2, {p_star})"));
        }
        if !(1.0..2.0).contains(&s) {
            notes.push(format!("s = {s} outside [1, 2)"));
        } else if p.is_finite() && p * s >= 2.0 * (p - s) {
            notes.push(format!("ps = {} not below 2(p − s) = {}", p * s, 2.0 * (p - s)));
        }
        notes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftNorm {
    pub triple: ShiftTriple,
    pub hess_v: f64,
    pub grad_p: f64,
    pub grad_v_inf_s: f64,
    pub beta: f64,
    /// `∫₀ᵀ‖∇v‖_∞ˢ / T^β`
    pub scaled: f64,
    pub warnings: Vec<String>,
}

/// Left-hand sides of the a-priori estimates evaluated on a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub t: Vec<f64>,
    /// `‖∇v‖₂² + (1/2μ)∫₀ᵗ(‖√ρ̃v_t‖₂² + (μ²‖∇²v‖₂² + ‖∇P‖₂²)/ρ*)`
    pub h1_lhs: Vec<f64>,
    /// `(e + ‖∇v₀‖₂²)^{exp(C₀‖√ρ̃₀v₀‖₂²)} − e` at the fitted `C₀`.
    pub gronwall_rhs: Vec<f64>,
    pub fitted_c0: f64,
    /// `sup_{τ≤t} τ‖√ρ̃v_τ‖₂² + ∫₀ᵗ τ‖∇v_τ‖₂²`
    pub time_weighted_lhs: Vec<f64>,
    pub shift_norms: Vec<ShiftNorm>,
}

/// Trapezoid weights on the slice times.
fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1])).sum()
}

/// `‖√t g(t)‖_{L_p(0,T)}`.
fn weighted_bochner(t: &[f64], g: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return t.iter().zip(g).map(|(t, g)| t.sqrt() * g).fold(0.0, f64::max);
    }
    let y: Vec<f64> = t.iter().zip(g).map(|(t, g)| (t.sqrt() * g).powf(p)).collect();
    trapezoid(t, &y).powf(1.0 / p)
}

/// `v_t` and `∇P` are unavailable at the initial slice; they are held at the first
/// computed value there, and the `h1` integrand is integrated by the trapezoid rule.
pub fn apriori_functionals(trajectory: &Trajectory, table: &[ShiftTriple]) -> Result<AprioriReport> {
    let (records, slices) = (&trajectory.records, &trajectory.slices);
    if records.is_empty() {
        return Err(Error::Domain("empty trajectory".into()));
    }
    let settings = &trajectory.settings;
    let (mu, rho_star) = (settings.mu, settings.rho_star);
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();

    let first_vt = records.iter().find_map(|r| r.sqrho_vt_l2).unwrap_or(0.0);
    let first_gp = records.get(1).map_or(records[0].grad_p_l2, |r| r.grad_p_l2);
    let integrand: Vec<f64> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let vt = r.sqrho_vt_l2.unwrap_or(first_vt);
            let gp = if i == 0 && r.sqrho_vt_l2.is_none() { first_gp } else { r.grad_p_l2 };
            (vt * vt + (mu * mu * r.hess_v_l2.powi(2) + gp * gp) / rho_star) / (2.0 * mu)
        })
        .collect();
    let mut acc = 0.0;
    let h1_lhs: Vec<f64> = (0..records.len())
        .map(|i| {
            if i > 0 {
                acc += 0.5 * (t[i] - t[i - 1]) * (integrand[i - 1] + integrand[i]);
            }
            records[i].grad_v_l2.powi(2) + acc
        })
        .collect();

    let x0 = records[0].grad_v_l2.powi(2);
    let e0 = 2.0 * records[0].kinetic_energy;
    let base = (E + x0).ln();
    let need = h1_lhs.iter().map(|&l| ((E + l).ln() / base).ln()).fold(0.0, f64::max);
    let fitted_c0 = if need <= 0.0 {
        0.0
    } else if e0 > 0.0 {
        need / e0
    } else {
        f64::INFINITY
    };
    let rhs = if fitted_c0.is_finite() { (base * (fitted_c0 * e0).exp()).exp() - E } else { f64::INFINITY };

    let mut sup = 0.0f64;
    let time_weighted_lhs = records
        .iter()
        .map(|r| {
            sup = sup.max(r.weighted_vt.unwrap_or(0.0));
            sup + r.weighted_grad_vt_cum
        })
        .collect();

    let t_end = *t.last().expect("nonempty");
    let shift_norms = table
        .iter()
        .map(|triple| {
            let k = settings.r_list.iter().position(|&r| r == triple.r).ok_or_else(|| {
                Error::Domain(format!("r = {} was not recorded; tracked r are {:?}", triple.r, settings.r_list))
            })?;
            let hess: Vec<f64> = slices.iter().map(|s| s.hess_v_lr[k]).collect();
            let grad_p: Vec<f64> = slices.iter().map(|s| s.grad_p_lr[k]).collect();
            let inf_s: Vec<f64> = slices.iter().map(|s| s.grad_v_inf.powf(triple.s)).collect();
            let grad_v_inf_s = trapezoid(&t, &inf_s);
            let beta = triple.beta();
            let warnings = triple.range_notes();
            for w in &warnings {
                log::warn!("shift triple {triple:?}: {w}");
            }
            Ok(ShiftNorm {
                triple: *triple,
                hess_v: weighted_bochner(&t, &hess, triple.p),
                grad_p: weighted_bochner(&t, &grad_p, triple.p),
                grad_v_inf_s,
                beta,
                scaled: if t_end > 0.0 { grad_v_inf_s / t_end.powf(beta) } else { 0.0 },
                warnings,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(AprioriReport { gronwall_rhs: vec![rhs; t.len()], t, h1_lhs, fitted_c0, time_weighted_lhs, shift_norms })
}
