//! Periodic interpolation of 2D nodal samples.
//!
//! Coordinates are in index units: node `(i, j)` sits at `(i, j)`, and every
//! position is wrapped modulo `n`.

use crate::ScalarField;

/// Cubic Lagrange weights for nodes `-1, 0, 1, 2` at fractional offset `t ∈ [0, 1)`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// Read-only periodic view of one 2D sample array.
#[derive(Clone, Copy, Debug)]
pub struct Periodic2<'a> {
    values: &'a [f64],
    n: usize,
}

impl<'a> Periodic2<'a> {
    pub fn new(field: &'a ScalarField) -> Self {
        debug_assert_eq!(field.grid().d(), 2);
        Periodic2 { values: field.values(), n: field.grid().n() }
    }

    pub fn from_slice(values: &'a [f64], n: usize) -> Self {
        assert_eq!(values.len(), n * n);
        Periodic2 { values, n }
    }

    #[inline]
    fn at(&self, i: i64, j: i64) -> f64 {
        let n = self.n as i64;
        self.values[(i.rem_euclid(n) + n * j.rem_euclid(n)) as usize]
    }

    #[inline]
    fn split(x: f64) -> (i64, f64) {
        let f = x.floor();
        (f as i64, x - f)
    }

    pub fn linear(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = Self::split(x);
        let (j, ty) = Self::split(y);
        let row = |jj| self.at(i, jj) * (1.0 - tx) + self.at(i + 1, jj) * tx;
        row(j) * (1.0 - ty) + row(j + 1) * ty
    }

    /// Tensor-product cubic Lagrange interpolation (16-point stencil).
    pub fn cubic(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = Self::split(x);
        let (j, ty) = Self::split(y);
        let wx = cubic_weights(tx);
        let wy = cubic_weights(ty);
        wy.iter().zip(-1..3).fold(0.0, |acc, (&wj, dj)| {
            let row = wx.iter().zip(-1..3).fold(0.0, |r, (&wi, di)| r + wi * self.at(i + di, j + dj));
            acc + wj * row
        })
    }

    /// Cubic value limited to the range of the four cell corners, so no new
    /// extrema can appear.
    pub fn cubic_clipped(&self, x: f64, y: f64) -> f64 {
        let (i, _) = Self::split(x);
        let (j, _) = Self::split(y);
        let corners = [self.at(i, j), self.at(i + 1, j), self.at(i, j + 1), self.at(i + 1, j + 1)];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.cubic(x, y).clamp(lo, hi)
    }

    /// Cubic interpolation at a physical point of the unit torus.
    pub fn cubic_at(&self, p: [f64; 2]) -> f64 {
        let n = self.n as f64;
        self.cubic(p[0] * n, p[1] * n)
    }
}
