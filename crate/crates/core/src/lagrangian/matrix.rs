use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::ScalarField;

pub type Mat2 = [[f64; 2]; 2];

pub const IDENTITY: Mat2 = [[1.0, 0.0], [0.0, 1.0]];

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn det(a: &Mat2) -> f64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Largest singular value.
pub fn op_norm(a: &Mat2) -> f64 {
    let f2: f64 = a.iter().flatten().map(|v| v * v).sum();
    let d = det(a);
    (0.5 * (f2 + (f2 * f2 - 4.0 * d * d).max(0.0).sqrt())).sqrt()
}

/// A 2×2 matrix at every node of a planar grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    grid: Grid,
    values: Vec<Mat2>,
}

impl MatrixField {
    pub fn new(grid: Grid, values: Vec<Mat2>) -> Result<Self> {
        if grid.d() != 2 {
            return Err(Error::Domain(format!("matrix fields are planar, got d = {}", grid.d())));
        }
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} matrices for {} nodes", values.len(), grid.len())));
        }
        Ok(MatrixField { grid, values })
    }

    pub fn identity(grid: Grid) -> Self {
        MatrixField { grid, values: vec![IDENTITY; grid.len()] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Mat2) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let x: [f64; 3] = grid.node(i);
                f([x[0], x[1]])
            })
            .collect();
        MatrixField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[Mat2] {
        &self.values
    }

    pub fn entry(&self, i: usize, j: usize) -> ScalarField {
        ScalarField::from_vec(self.grid, self.values.iter().map(|m| m[i][j]).collect())
    }

    pub fn det(&self) -> ScalarField {
        ScalarField::from_vec(self.grid, self.values.iter().map(det).collect())
    }

    /// Nodewise inverse; fails where `|det| < 1e-8`.
    pub fn inverse(&self) -> Result<Self> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(label, m)| {
                let d = det(m);
                if d.abs() < 1e-8 {
                    return Err(Error::SingularMap { label, det: d });
                }
                Ok([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]])
            })
            .collect::<Result<_>>()?;
        Ok(MatrixField { grid: self.grid, values })
    }

    /// `max_y ‖M(y) − Id‖` in the spectral norm.
    pub fn distance_from_identity(&self) -> f64 {
        self.values.iter().map(|m| op_norm(&[[m[0][0] - 1.0, m[0][1]], [m[1][0], m[1][1] - 1.0]])).fold(0.0, f64::max)
    }

    /// Largest entrywise difference.
    pub fn max_difference(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| (0..4).map(move |k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs()))
            .fold(0.0, f64::max)
    }
}
