use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::spectral::{vector_from_spectra, vector_spectra};
use crate::fields::{gradient, jacobian};
use crate::solver::FluidState;
use crate::{ScalarField, VectorField};

/// Energies below this are treated as zero when normalizing residuals.
pub const ENERGY_FLOOR: f64 = 1e-12;

/// What a [`Tracker`] measures besides the fixed record fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsSettings {
    pub mu: f64,
    /// Floor `ε` of the momentum solve; energy and momentum are weighted by `max(ρ, ε)`.
    pub eps_floor: f64,
    pub rho_star: f64,
    /// Exponents of the reported `‖ρ‖_p`.
    pub p_list: Vec<f64>,
    /// Spatial exponents `r` at which `‖∇²v‖_r` and `‖∇P‖_r` are kept for Bochner norms.
    pub r_list: Vec<f64>,
}

impl Default for DiagnosticsSettings {
    fn default() -> Self {
        DiagnosticsSettings {
            mu: 0.01,
            eps_floor: 0.0,
            rho_star: 1.0,
            p_list: vec![1.0, 2.0, 4.0],
            r_list: vec![2.0, 4.0],
        }
    }
}

/// Identities and norms of one time slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `½∫ρ̃|v|²`
    pub kinetic_energy: f64,
    /// `μ∫₀ᵗ‖∇v‖₂²` by the trapezoid rule over observed slices.
    pub cumulative_dissipation: f64,
    pub total_mass: f64,
    /// `∫ρ̃v`
    pub total_momentum: Vec<f64>,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `(p, ‖ρ‖_p)` pairs.
    pub rho_lp: Vec<(f64, f64)>,
    pub grad_v_l2: f64,
    /// `‖√ρ̃ v_t‖₂`; absent at the initial slice.
    pub sqrho_vt_l2: Option<f64>,
    pub hess_v_l2: f64,
    pub grad_p_l2: f64,
    /// `t‖√ρ̃ v_t‖₂²`
    pub weighted_vt: Option<f64>,
    /// `∫ τ‖∇v_τ‖₂² dτ` over slices that carry `v_t`.
    pub weighted_grad_vt_cum: f64,
}

/// Spatial norms kept per slice for the time-integrated functionals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceNorms {
    pub t: f64,
    /// `‖∇v‖_∞` with the pointwise Frobenius norm.
    pub grad_v_inf: f64,
    /// `‖∇²v‖_r` for each `r` of the settings.
    pub hess_v_lr: Vec<f64>,
    pub grad_p_lr: Vec<f64>,
    pub grad_vt_l2: Option<f64>,
}

/// Pointwise Frobenius norm of a list of vector fields.
fn frobenius(parts: &[VectorField]) -> ScalarField {
    let grid = parts[0].grid();
    let mut acc = ScalarField::zeros(grid);
    for part in parts {
        for c in part.components() {
            acc = acc.zip_map(c, |a, x| a + x * x);
        }
    }
    acc.map(f64::sqrt)
}

/// `∂_b∂_c v_a` for all `a, b, c`, grouped per `(a, b)`.
fn hessian(v: &VectorField) -> Vec<VectorField> {
    let d = v.dim();
    vector_spectra(v)
        .iter()
        .flat_map(|s| {
            (0..d).map(move |b| {
                let sb = s.derivative(b);
                vector_from_spectra(&(0..d).map(|c| sb.derivative(c)).collect::<Vec<_>>())
            })
        })
        .collect()
}

fn floored(rho: &ScalarField, eps: f64) -> ScalarField {
    rho.map(|r| r.max(eps))
}

fn check_exponents(ps: &[f64]) -> Result<()> {
    match ps.iter().find(|p| !(**p >= 1.0)) {
        Some(p) => Err(Error::Domain(format!("Lebesgue exponent {p} below 1"))),
        None => Ok(()),
    }
}

/// Instantaneous fields of the record; cumulative fields are zero.
pub fn conserved_report(state: &FluidState, p_list: &[f64], eps_floor: f64) -> Result<DiagnosticsRecord> {
    check_exponents(p_list)?;
    let w = floored(&state.rho, eps_floor);
    let rho_v = state.v.weighted(&w);
    let grad_v = jacobian(&state.v);
    let l2 = |parts: &[VectorField]| parts.iter().map(|g| g.dot(g)).sum::<f64>().sqrt();
    let sqrho_vt_l2 = state.vt.as_ref().map(|vt| vt.weighted(&w).dot(vt).sqrt());
    Ok(DiagnosticsRecord {
        t: state.t,
        kinetic_energy: 0.5 * rho_v.dot(&state.v),
        cumulative_dissipation: 0.0,
        total_mass: state.rho.integral(),
        total_momentum: rho_v.integral(),
        rho_min: state.rho.min(),
        rho_max: state.rho.max(),
        rho_lp: p_list.iter().map(|&p| state.rho.lp_norm(p).map(|n| (p, n))).collect::<Result<_>>()?,
        grad_v_l2: l2(&grad_v),
        sqrho_vt_l2,
        hess_v_l2: l2(&hessian(&state.v)),
        grad_p_l2: gradient(&state.p).l2_norm(),
        weighted_vt: sqrho_vt_l2.map(|n| state.t * n * n),
        weighted_grad_vt_cum: 0.0,
    })
}

fn slice_norms(state: &FluidState, r_list: &[f64]) -> Result<SliceNorms> {
    let hess = frobenius(&hessian(&state.v));
    let grad_p = gradient(&state.p).magnitude();
    let lr = |f: &ScalarField| r_list.iter().map(|&r| f.lp_norm(r)).collect::<Result<Vec<_>>>();
    Ok(SliceNorms {
        t: state.t,
        grad_v_inf: frobenius(&jacobian(&state.v)).max(),
        hess_v_lr: lr(&hess)?,
        grad_p_lr: lr(&grad_p)?,
        grad_vt_l2: state.vt.as_ref().map(|vt| jacobian(vt).iter().map(|g| g.dot(g)).sum::<f64>().sqrt()),
    })
}

/// Accumulates records slice by slice; observe every step for accurate time quadrature.
#[derive(Clone, Debug)]
pub struct Tracker {
    settings: DiagnosticsSettings,
    records: Vec<DiagnosticsRecord>,
    slices: Vec<SliceNorms>,
}

impl Tracker {
    pub fn new(settings: DiagnosticsSettings) -> Result<Self> {
        check_exponents(&settings.p_list)?;
        check_exponents(&settings.r_list)?;
        Ok(Tracker { settings, records: Vec::new(), slices: Vec::new() })
    }

    pub fn settings(&self) -> &DiagnosticsSettings {
        &self.settings
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn observe(&mut self, state: &FluidState) -> Result<&DiagnosticsRecord> {
        let mut rec = conserved_report(state, &self.settings.p_list, self.settings.eps_floor)?;
        let slice = slice_norms(state, &self.settings.r_list)?;
        if let (Some(prev), Some(prev_slice)) = (self.records.last(), self.slices.last()) {
            let h = rec.t - prev.t;
            if !(h > 0.0) {
                return Err(Error::Domain(format!("slice at t = {} does not advance past {}", rec.t, prev.t)));
            }
            let mu = self.settings.mu;
            rec.cumulative_dissipation =
                prev.cumulative_dissipation + 0.5 * h * mu * (prev.grad_v_l2.powi(2) + rec.grad_v_l2.powi(2));
            rec.weighted_grad_vt_cum = prev.weighted_grad_vt_cum
                + match (prev_slice.grad_vt_l2, slice.grad_vt_l2) {
                    (Some(a), Some(b)) => 0.5 * h * (prev.t * a * a + rec.t * b * b),
                    _ => 0.0,
                };
        }
        self.records.push(rec);
        self.slices.push(slice);
        Ok(self.records.last().expect("just pushed"))
    }

    pub fn finish(self) -> Trajectory {
        Trajectory { settings: self.settings, records: self.records, slices: self.slices }
    }
}

/// Observed slices of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub settings: DiagnosticsSettings,
    pub records: Vec<DiagnosticsRecord>,
    pub slices: Vec<SliceNorms>,
}

impl Trajectory {
    /// Largest `|M(t) − M(0)|/M(0)`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.records.first().map_or(0.0, |r| r.total_mass);
        self.records.iter().map(|r| (r.total_mass - m0).abs() / m0.abs().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
    }

    /// Largest `|P(t) − P(0)|` over `max(|P(0)|, scale)`, where `scale` is typically `∫ρ̃₀|v₀|`.
    pub fn momentum_drift(&self, scale: f64) -> f64 {
        let Some(first) = self.records.first() else { return 0.0 };
        let norm = |p: &[f64]| p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = norm(&first.total_momentum).max(scale).max(f64::MIN_POSITIVE);
        self.records
            .iter()
            .map(|r| {
                let diff: Vec<f64> = r.total_momentum.iter().zip(&first.total_momentum).map(|(a, b)| a - b).collect();
                norm(&diff) / denom
            })
            .fold(0.0, f64::max)
    }
}

/// `|E(t) + μ∫₀ᵗ‖∇v‖² − E(0)| / max(E(0), floor)` per slice.
pub fn energy_residual(trajectory: &Trajectory) -> Result<Vec<f64>> {
    let records = &trajectory.records;
    if records.len() < 2 {
        return Err(Error::Domain(format!("energy residual needs two slices, got {}", records.len())));
    }
    let e0 = records[0].kinetic_energy;
    let scale = e0.max(ENERGY_FLOOR);
    Ok(records.iter().map(|r| (r.kinetic_energy + r.cumulative_dissipation - e0).abs() / scale).collect())
}
