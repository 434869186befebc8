use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform periodic grid on the unit torus `[0,1)^d`.
///
/// Nodes are stored with the first coordinate varying fastest:
/// `flat = i0 + n * (i1 + n * i2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    d: usize,
}

impl Grid {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {n} must be a power of two and at least 8")));
        }
        if !(2..=3).contains(&d) {
            return Err(Error::InvalidGrid(format!("dimension {d} not in {{2, 3}}")));
        }
        Ok(Grid { n, d })
    }

    /// Two-dimensional grid; panics on an invalid `n`.
    pub fn square(n: usize) -> Self {
        Grid::new(n, 2).expect("valid 2D grid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing<T: Real>(&self) -> T {
        T::one() / T::of(self.n as f64)
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume<T: Real>(&self) -> T {
        self.spacing::<T>().powi(self.d as i32)
    }

    /// Stride of axis `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n;
        [flat % n, (flat / n) % n, if self.d == 3 { flat / (n * n) } else { 0 }]
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        let n = self.n;
        idx[0] % n + n * (idx[1] % n) + if self.d == 3 { n * n * (idx[2] % n) } else { 0 }
    }

    /// Physical coordinates of a node (unused axes are zero).
    pub fn node<T: Real>(&self, flat: usize) -> [T; 3] {
        let h = self.spacing::<T>();
        let m = self.multi_index(flat);
        [T::of(m[0] as f64) * h, T::of(m[1] as f64) * h, T::of(m[2] as f64) * h]
    }

    /// Signed wavenumber of FFT index `i`, in `[-n/2, n/2)`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Integer wave vector of a flat spectral index.
    pub fn wave_vector(&self, flat: usize) -> [i64; 3] {
        let m = self.multi_index(flat);
        let k2 = if self.d == 3 { self.wavenumber(m[2]) } else { 0 };
        [self.wavenumber(m[0]), self.wavenumber(m[1]), k2]
    }

    /// True when any component of the wave vector sits on the Nyquist index.
    pub fn touches_nyquist(&self, flat: usize) -> bool {
        let m = self.multi_index(flat);
        (0..self.d).any(|a| self.is_nyquist(m[a]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_resolutions() {
        assert!(Grid::new(4, 2).is_err());
        assert!(Grid::new(12, 2).is_err());
        assert!(Grid::new(16, 4).is_err());
        assert!(Grid::new(16, 3).is_ok());
    }

    #[test]
    fn flat_index_round_trips_periodically() {
        let g = Grid::new(8, 3).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat(g.multi_index(flat)), flat);
        }
        assert_eq!(g.flat([8, 9, 0]), g.flat([0, 1, 0]));
    }

    #[test]
    fn wavenumbers_are_centered() {
        let g = Grid::square(8);
        let ks: Vec<i64> = (0..8).map(|i| g.wavenumber(i)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }
}
