use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::flow::{FlowIntegrator, VelocitySlice};
use crate::error::{Error, Result};

/// Largest tolerated ratio of longest to shortest marker gap.
pub const SPACING_LIMIT: f64 = 20.0;

/// Closed polyline of markers in unwrapped plane coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub points: Vec<[f64; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderSample {
    pub t: f64,
    /// `max |τ(s) − τ(s′)|/|s − s′|^α` over marker pairs at least two mean spacings apart.
    pub seminorm: f64,
    pub spacing_ratio: f64,
    pub length: f64,
}

impl BoundaryCurve {
    pub fn circle(center: [f64; 2], radius: f64, markers: usize) -> Self {
        let points = (0..markers)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / markers as f64;
                [center[0] + radius * th.cos(), center[1] + radius * th.sin()]
            })
            .collect();
        BoundaryCurve { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn gaps(&self) -> Vec<f64> {
        let m = self.points.len();
        (0..m)
            .map(|i| {
                let (p, q) = (self.points[i], self.points[(i + 1) % m]);
                (q[0] - p[0]).hypot(q[1] - p[1])
            })
            .collect()
    }

    pub fn spacing_ratio(&self) -> f64 {
        let g = self.gaps();
        g.iter().copied().fold(0.0, f64::max) / g.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Unit tangents by centred differences.
    pub fn tangents(&self) -> Vec<[f64; 2]> {
        let m = self.points.len();
        (0..m)
            .map(|i| {
                let (p, q) = (self.points[(i + m - 1) % m], self.points[(i + 1) % m]);
                let d = [q[0] - p[0], q[1] - p[1]];
                let l = d[0].hypot(d[1]);
                [d[0] / l, d[1] / l]
            })
            .collect()
    }

    /// No two non-adjacent segments cross.
    pub fn is_simple(&self) -> bool {
        let m = self.points.len();
        let cross =
            |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
        let seg = |i: usize| (self.points[i], self.points[(i + 1) % m]);
        (0..m).all(|i| {
            ((i + 2)..m).all(|j| {
                if (j + 1) % m == i {
                    return true;
                }
                let ((a, b), (c, d)) = (seg(i), seg(j));
                !(cross(a, b, c) * cross(a, b, d) < 0.0 && cross(c, d, a) * cross(c, d, b) < 0.0)
            })
        })
    }

    /// Hölder seminorm of the unit tangent in arc length.
    pub fn holder_seminorm(&self, alpha: f64, t: f64) -> Result<HolderSample> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("Hölder exponent {alpha} outside (0, 1)")));
        }
        if self.points.len() < 8 {
            return Err(Error::Domain(format!("{} markers cannot resolve a tangent", self.points.len())));
        }
        let spacing_ratio = self.spacing_ratio();
        if spacing_ratio > SPACING_LIMIT {
            return Err(Error::ReseedRequired { ratio: spacing_ratio, limit: SPACING_LIMIT });
        }
        let gaps = self.gaps();
        let length: f64 = gaps.iter().sum();
        let cutoff = 2.0 * length / gaps.len() as f64;
        let mut s = Vec::with_capacity(gaps.len());
        let mut acc = 0.0;
        for g in &gaps {
            s.push(acc);
            acc += g;
        }
        let tau = self.tangents();
        let mut seminorm = 0.0f64;
        for i in 0..tau.len() {
            for j in (i + 1)..tau.len() {
                let ds = s[j] - s[i];
                let dist = ds.min(length - ds);
                if dist < cutoff {
                    continue;
                }
                let dt = (tau[i][0] - tau[j][0]).hypot(tau[i][1] - tau[j][1]);
                seminorm = seminorm.max(dt / dist.powf(alpha));
            }
        }
        Ok(HolderSample { t, seminorm, spacing_ratio, length })
    }
}

/// Markers of a patch boundary carried by the flow.
#[derive(Clone, Debug)]
pub struct BoundaryTracker {
    flow: FlowIntegrator,
    alpha: f64,
    series: Vec<HolderSample>,
}

impl BoundaryTracker {
    pub fn new(curve: BoundaryCurve, t0: f64, alpha: f64) -> Result<Self> {
        curve.holder_seminorm(alpha, t0)?;
        Ok(BoundaryTracker { flow: FlowIntegrator::new(curve.points, t0, false), alpha, series: vec![] })
    }

    pub fn advance(&mut self, a: &VelocitySlice, b: &VelocitySlice) -> Result<()> {
        self.flow.advance(a, b)
    }

    pub fn curve(&self) -> BoundaryCurve {
        BoundaryCurve { points: self.flow.positions() }
    }

    pub fn t(&self) -> f64 {
        self.flow.t()
    }

    /// Evaluates and records the seminorm at the current time.
    pub fn sample(&mut self) -> Result<HolderSample> {
        let h = self.curve().holder_seminorm(self.alpha, self.flow.t())?;
        self.series.push(h);
        Ok(h)
    }

    pub fn series(&self) -> &[HolderSample] {
        &self.series
    }

    pub fn max_step_error(&self) -> f64 {
        self.flow.max_step_error()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::VectorField;

    #[test]
    fn straight_segment_has_zero_seminorm() {
        // A thin closed loop: two parallel segments joined at the ends.
        let mut points: Vec<[f64; 2]> = (0..40).map(|i| [i as f64 * 0.01, 0.0]).collect();
        let tau: Vec<[f64; 2]> = BoundaryCurve { points: points.clone() }.tangents();
        assert!(tau[5..35].iter().all(|t| (t[0] - 1.0).abs() < 1e-15 && t[1] == 0.0));
        points.truncate(3);
        assert!(BoundaryCurve { points }.holder_seminorm(0.5, 0.0).is_err());
    }

    #[test]
    fn circle_seminorm_is_resolution_independent() {
        let r = 0.25;
        let coarse = BoundaryCurve::circle([0.5, 0.5], r, 256).holder_seminorm(0.5, 0.0).unwrap();
        let fine = BoundaryCurve::circle([0.5, 0.5], r, 1024).holder_seminorm(0.5, 0.0).unwrap();
        // |τ(s) − τ(s′)| = 2 sin(d/2r) peaks against d^{1/2} at d/2r ≈ 1.1656
        let d = 2.0 * r * 1.165_561_185_207_211;
        let exact = 2.0 * (d / (2.0 * r)).sin() / d.sqrt();
        assert!((fine.seminorm - exact).abs() < 1e-3 * exact, "{} vs {exact}", fine.seminorm);
        assert!((coarse.seminorm - fine.seminorm).abs() < 1e-2 * exact);
        assert!((fine.length - 2.0 * PI * r).abs() < 1e-4);
    }

    #[test]
    fn frozen_curve_keeps_its_seminorm() {
        let grid = Grid::square(16);
        let v = VectorField::zeros(grid);
        let slices: Vec<_> = (0..3).map(|k| VelocitySlice::new(0.1 * k as f64, &v, false).unwrap()).collect();
        let mut tracker = BoundaryTracker::new(BoundaryCurve::circle([0.5, 0.5], 0.25, 128), 0.0, 0.5).unwrap();
        let h0 = tracker.sample().unwrap();
        for w in slices.windows(2) {
            tracker.advance(&w[0], &w[1]).unwrap();
        }
        assert_eq!(tracker.sample().unwrap().seminorm, h0.seminorm);
        assert_eq!(tracker.series().len(), 2);
    }

    #[test]
    fn uneven_markers_require_reseeding() {
        let mut c = BoundaryCurve::circle([0.5, 0.5], 0.25, 64);
        // Collapse one gap far below the others.
        c.points[1] = [c.points[0][0] * 0.99 + c.points[1][0] * 0.01, c.points[0][1] * 0.99 + c.points[1][1] * 0.01];
        assert!(matches!(c.holder_seminorm(0.5, 0.0), Err(Error::ReseedRequired { .. })));
        assert!(BoundaryCurve::circle([0.5, 0.5], 0.25, 64).is_simple());
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let points = (0..64)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / 64.0;
                [th.sin(), th.sin() * th.cos()]
            })
            .collect();
        assert!(!BoundaryCurve { points }.is_simple());
    }
}
