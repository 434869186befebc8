use gauss_quad::legendre::GaussLegendre;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;

use crate::error::{Error, Result};
use crate::{ScalarField, VectorField};

/// Values whose pairwise `L_p` distances can be measured.
pub trait LpSample {
    fn lp(&self, p: f64) -> Result<f64>;
    fn lp_distance(&self, other: &Self, p: f64) -> Result<f64>;
}

impl LpSample for f64 {
    fn lp(&self, _p: f64) -> Result<f64> {
        Ok(self.abs())
    }

    fn lp_distance(&self, other: &Self, _p: f64) -> Result<f64> {
        Ok((self - other).abs())
    }
}

impl LpSample for ScalarField {
    fn lp(&self, p: f64) -> Result<f64> {
        self.lp_norm(p)
    }

    fn lp_distance(&self, other: &Self, p: f64) -> Result<f64> {
        (self - other).lp_norm(p)
    }
}

impl LpSample for VectorField {
    fn lp(&self, p: f64) -> Result<f64> {
        self.lp_norm(p)
    }

    fn lp_distance(&self, other: &Self, p: f64) -> Result<f64> {
        (self - other).lp_norm(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalNorm {
    pub alpha: f64,
    pub p: f64,
    /// `‖z‖²_{L₂(0,T;L_p)}`
    pub l2_lp_sq: f64,
    /// `∫₀ᵀ h^{2α−2} ∫₀^{T−h} ‖z(t+h) − z(t)‖_p² dt dh`
    pub seminorm_sq: f64,
    /// `‖z‖²_{H^{1/2−α}(0,T;L_p)}`
    pub norm_sq: f64,
    /// `‖√t z_t‖²_{L₂(0,T;L_p)}` of the piecewise-linear interpolant.
    pub weighted_dt_sq: f64,
    pub c_alpha_t: f64,
    /// `l2_lp_sq + c_alpha_t·weighted_dt_sq`
    pub bound_rhs: f64,
}

impl FractionalNorm {
    pub fn holds(&self) -> bool {
        self.norm_sq <= self.bound_rhs
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} outside (0, 1/2)")))
    }
}

/// Samples `z(iΔ)`, `i = 0..N`, on `[0, T = NΔ]`.
///
/// Inner integrals use the trapezoid rule on the sample grid. The outer `h` integral
/// uses the trapezoid rule for `h ≥ Δ`, and on `(0, Δ)` integrates `h^{2α−2}·D(Δ)(h/Δ)²`
/// exactly, since increments vanish quadratically for smooth `z`.
pub fn fractional_time_norm<F: LpSample>(samples: &[F], dt: f64, alpha: f64, p: f64) -> Result<FractionalNorm> {
    check_alpha(alpha)?;
    if samples.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 samples, got {}", samples.len())));
    }
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("sample spacing {dt} must be positive")));
    }
    let n = samples.len() - 1;
    let t_end = n as f64 * dt;

    let sq: Vec<f64> = samples.iter().map(|z| z.lp(p).map(|v| v * v)).collect::<Result<_>>()?;
    let l2_lp_sq = dt * (sq.iter().sum::<f64>() - 0.5 * (sq[0] + sq[n]));

    // increments[j − 1] = ∫₀^{T−jΔ} ‖z(t + jΔ) − z(t)‖² dt
    let increments: Vec<f64> = (1..=n)
        .map(|j| {
            let d: Vec<f64> = (0..=n - j)
                .map(|i| samples[i + j].lp_distance(&samples[i], p).map(|v| v * v))
                .collect::<Result<_>>()?;
            Ok(match d.len() {
                1 => 0.0,
                m => dt * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[m - 1])),
            })
        })
        .collect::<Result<_>>()?;
    let weight = |j: usize| (j as f64 * dt).powf(2.0 * alpha - 2.0);
    let first = increments[0] * dt.powf(2.0 * alpha - 1.0) / (2.0 * alpha + 1.0);
    let rest: f64 = (1..n).map(|j| 0.5 * dt * (weight(j) * increments[j - 1] + weight(j + 1) * increments[j])).sum();
    let seminorm_sq = first + rest;

    let weighted_dt_sq = (0..n)
        .map(|i| {
            let d = samples[i + 1].lp_distance(&samples[i], p)? / dt;
            Ok((i as f64 + 0.5) * dt * dt * d * d)
        })
        .sum::<Result<f64>>()?;

    let c = c_alpha_t(alpha, t_end)?;
    Ok(FractionalNorm {
        alpha,
        p,
        l2_lp_sq,
        seminorm_sq,
        norm_sq: l2_lp_sq + seminorm_sq,
        weighted_dt_sq,
        c_alpha_t: c,
        bound_rhs: l2_lp_sq + c * weighted_dt_sq,
    })
}

/// Geometric offsets `L·rᵏ` from `L` down to the first one at or below `tiny`.
fn graded(len: f64, tiny: f64) -> Vec<f64> {
    const RATIO: f64 = 0.25;
    let mut pts = vec![len];
    let mut d = len;
    while d > tiny {
        d *= RATIO;
        pts.push(d);
    }
    pts
}

/// `(1/(1−2α))∫₀ᵀ∫ₜᵀ((s−t)^{2α−1} − T^{2α−1}) ds/s dt` by Gauss–Legendre on panels
/// graded toward the integrable singularities at `s = t`, `t = 0` and `t = T`.
pub fn c_alpha_t(alpha: f64, t_end: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t_end > 0.0) {
        return Err(Error::Domain(format!("horizon {t_end} must be positive")));
    }
    let gl = GaussLegendre::new(NonZeroUsize::new(12).expect("nonzero"));
    let e = 2.0 * alpha - 1.0;
    let tail_power = t_end.powf(e);

    // Inner integral in the offset σ = s − t.
    let inner = |t: f64| {
        let f = |sigma: f64| (sigma.powf(e) - tail_power) / (t + sigma);
        let pts = graded(t_end - t, 1e-12 * t);
        let body: f64 = pts.windows(2).map(|w| gl.integrate(w[1], w[0], f)).sum();
        // On (0, δ) with δ ≪ t, 1/(t + σ) is 1/t to relative accuracy δ/t.
        let delta = if pts.len() > 1 { pts[pts.len() - 1] } else { pts[0] };
        body + (delta.powf(2.0 * alpha) / (2.0 * alpha) - tail_power * delta) / t
    };

    let half = 0.5 * t_end;
    let offsets = graded(half, 1e-14 * t_end);
    let mut total: f64 = offsets.windows(2).map(|w| gl.integrate(w[1], w[0], inner)).sum();
    total += offsets.windows(2).map(|w| gl.integrate(t_end - w[0], t_end - w[1], inner)).sum::<f64>();
    // Near t = 0 the inner integral behaves like t^{2α−1}.
    let tau = *offsets.last().expect("nonempty");
    total += inner(tau) * tau / (2.0 * alpha);
    Ok(total / (1.0 - 2.0 * alpha))
}
