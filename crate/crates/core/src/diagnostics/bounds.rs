use serde::Serialize;
use std::f64::consts::E;

use crate::error::{Error, Result};

/// Samples `y(t)` at increasing times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Series {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
}

impl Series {
    pub fn new(t: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if t.len() != y.len() || t.is_empty() {
            return Err(Error::Domain(format!("{} times for {} samples", t.len(), y.len())));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) || t.iter().chain(&y).any(|x| !x.is_finite()) {
            return Err(Error::Domain("sample times must be finite and strictly increasing".into()));
        }
        Ok(Series { t, y })
    }

    /// Samples `f` on `samples + 1` equispaced points of `[0, t_end]`.
    pub fn sample(t_end: f64, samples: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let t: Vec<f64> = (0..=samples).map(|i| t_end * i as f64 / samples.max(1) as f64).collect();
        let y = t.iter().map(|&s| f(s)).collect();
        Series::new(t, y)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Piecewise-linear interpolant, held constant outside the samples.
    pub fn at(&self, s: f64) -> f64 {
        let i = self.t.partition_point(|&t| t <= s);
        match i {
            0 => self.y[0],
            i if i == self.len() => self.y[i - 1],
            i => {
                let (t0, t1) = (self.t[i - 1], self.t[i]);
                let w = (s - t0) / (t1 - t0);
                self.y[i - 1] * (1.0 - w) + self.y[i] * w
            }
        }
    }

    /// Running trapezoid integral `∫_{t₀}^{tᵢ} y`.
    pub fn cumulative_integral(&self) -> Vec<f64> {
        let mut acc = 0.0;
        std::iter::once(0.0)
            .chain(self.t.windows(2).zip(self.y.windows(2)).map(|(t, y)| {
                acc += 0.5 * (t[1] - t[0]) * (y[0] + y[1]);
                acc
            }))
            .collect()
    }

    fn require_nonnegative(&self) -> Result<()> {
        match self.y.iter().find(|&&f| f < 0.0) {
            Some(f) => Err(Error::Domain(format!("coefficient sample {f} is negative"))),
            None => Ok(()),
        }
    }
}

/// `(e + X₀)^{exp ∫₀ᵗ f} − e` at each sample time.
pub fn gronwall_log_bound(x0: f64, f: &Series) -> Result<Vec<f64>> {
    if !(x0 >= 0.0) {
        return Err(Error::Domain(format!("initial value {x0} is negative")));
    }
    f.require_nonnegative()?;
    let base = (E + x0).ln();
    Ok(f.cumulative_integral().into_iter().map(|int| (base * int.exp()).exp() - E).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiccatiBound {
    /// `X₀/√(1 − 2X₀²∫₀ᵗf)`; `+∞` from the blowup time on.
    pub bound: Vec<f64>,
    pub blowup_time: Option<f64>,
}

/// Closed-form comparison for `X′ = fX³`.
pub fn riccati_bound_3d(x0: f64, f: &Series) -> Result<RiccatiBound> {
    if !(x0 >= 0.0) {
        return Err(Error::Domain(format!("initial value {x0} is negative")));
    }
    f.require_nonnegative()?;
    let cum = f.cumulative_integral();
    let c = 2.0 * x0 * x0;
    let bound =
        cum.iter().map(|&int| if c * int < 1.0 { x0 / (1.0 - c * int).sqrt() } else { f64::INFINITY }).collect();
    // The running integral is quadratic on each sample interval; solve c·F(t) = 1 there.
    let blowup_time = cum.iter().position(|&int| c * int >= 1.0).map(|i| {
        if i == 0 {
            return f.t[0];
        }
        let (t0, h) = (f.t[i - 1], f.t[i] - f.t[i - 1]);
        let (f0, f1) = (f.y[i - 1], f.y[i]);
        let need = 1.0 / c - cum[i - 1];
        // F(t0 + s) − F(t0) = f0·s + (f1 − f0)s²/(2h)
        let a = (f1 - f0) / (2.0 * h);
        let s = if a.abs() < 1e-300 { need / f0 } else { (-f0 + (f0 * f0 + 4.0 * a * need).sqrt()) / (2.0 * a) };
        t0 + s.clamp(0.0, h)
    });
    Ok(RiccatiBound { bound, blowup_time })
}

/// Classical RK4 for `X′ = f(t)·g(X)` on the sample grid of `f`, `substeps` per interval.
pub fn rk4_scalar(x0: f64, f: &Series, substeps: usize, g: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut x = x0;
    let mut out = vec![x0];
    for w in f.t.windows(2) {
        let h = (w[1] - w[0]) / substeps.max(1) as f64;
        for k in 0..substeps.max(1) {
            let t = w[0] + k as f64 * h;
            let rhs = |s: f64, x: f64| f.at(s) * g(x);
            let k1 = rhs(t, x);
            let k2 = rhs(t + 0.5 * h, x + 0.5 * h * k1);
            let k3 = rhs(t + 0.5 * h, x + 0.5 * h * k2);
            let k4 = rhs(t + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(x);
    }
    out
}

/// Smallness margin and local existence time of the three-dimensional theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThreeD {
    /// `cμ² − (ρ*)^{3/2} e₀ g₀`
    pub smallness_margin: f64,
    /// `(μ/ρ*)⁷ cρ* / (e₀² g₀⁶)`, `+∞` when `e₀g₀ = 0`.
    pub local_time: f64,
}

pub fn threed_formulas(rho_star: f64, mu: f64, e0: f64, g0: f64, c: f64) -> Result<ThreeD> {
    if !(rho_star > 0.0 && mu > 0.0 && c > 0.0 && e0 >= 0.0 && g0 >= 0.0) {
        return Err(Error::Domain(format!(
            "need rho_star, mu, c > 0 and e0, g0 ≥ 0; got {rho_star}, {mu}, {c}, {e0}, {g0}"
        )));
    }
    let smallness_margin = c * mu * mu - rho_star.powf(1.5) * e0 * g0;
    let local_time = if e0 == 0.0 || g0 == 0.0 {
        f64::INFINITY
    } else {
        (mu / rho_star).powi(7) * c * rho_star / (e0 * e0 * g0.powi(6))
    };
    Ok(ThreeD { smallness_margin, local_time })
}
