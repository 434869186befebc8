use log::info;

use super::matrix::{mat_mul, MatrixField, IDENTITY};
use crate::error::{Error, Result};
use crate::fields::{gradient, jacobian, Spectrum};
use crate::{ScalarField, VectorField};

#[derive(Clone, Debug)]
pub struct DeformationInverse {
    pub a_direct: MatrixField,
    pub a_neumann: MatrixField,
    /// Largest entrywise gap between the two.
    pub series_error: f64,
    /// `max_y ‖∇X − Id‖`, which bounds the ratio of successive series terms.
    pub deviation: f64,
}

/// `(∇X)⁻¹` directly and as `Σ_{k=0}^{K} (Id − ∇X)^k`.
pub fn deformation_inverse(grad_x: &MatrixField, terms: usize) -> Result<DeformationInverse> {
    let a_direct = grad_x.inverse()?;
    let deviation = grad_x.distance_from_identity();
    if deviation > 0.5 {
        info!("‖∇X − Id‖_∞ = {deviation:.3} exceeds 1/2; the series may converge slowly or not at all");
    }
    let values = grad_x
        .values()
        .iter()
        .map(|g| {
            let b = [[1.0 - g[0][0], -g[0][1]], [-g[1][0], 1.0 - g[1][1]]];
            let (mut sum, mut power) = (IDENTITY, IDENTITY);
            for _ in 0..terms {
                power = mat_mul(&power, &b);
                for i in 0..2 {
                    for j in 0..2 {
                        sum[i][j] += power[i][j];
                    }
                }
            }
            sum
        })
        .collect();
    let a_neumann = MatrixField::new(grad_x.grid(), values)?;
    let series_error = a_direct.max_difference(&a_neumann);
    Ok(DeformationInverse { a_direct, a_neumann, series_error, deviation })
}

#[derive(Clone, Debug)]
pub struct LagrangianOps {
    /// `ᵀA∇z` for each component of `z`.
    pub grad_u: Vec<VectorField>,
    /// `ᵀA:∇z = Σ A_{ij}∂_i z_j`
    pub div_u: ScalarField,
    /// `div(Az)`, differentiated after the product.
    pub div_az: ScalarField,
}

impl LagrangianOps {
    /// `‖ᵀA:∇z − div(Az)‖₂`, zero for det-1 maps by the Piola identity.
    pub fn discrepancy(&self) -> f64 {
        (&self.div_u - &self.div_az).l2_norm()
    }
}

/// The twisted operators for a planar vector field `z`.
pub fn lagrangian_ops(a: &MatrixField, z: &VectorField) -> Result<LagrangianOps> {
    let grid = a.grid();
    if z.grid() != grid || z.dim() != 2 {
        return Err(Error::GridMismatch("z must be a planar vector field on the grid of A".into()));
    }
    let entries = [0, 1].map(|i| [0, 1].map(|j| a.entry(i, j)));
    // jac[j].component(i) = ∂_i z_j
    let jac = jacobian(z);
    let grad_u = z
        .components()
        .iter()
        .map(|zj| {
            let g = gradient(zj);
            let comps = [0, 1].map(|b| {
                // (ᵀA∇z)_b = Σ_i A_{ib} ∂_i z
                &entries[0][b].zip_map(g.component(0), |x, y| x * y)
                    + &entries[1][b].zip_map(g.component(1), |x, y| x * y)
            });
            VectorField::new(comps.to_vec())
        })
        .collect::<Result<Vec<_>>>()?;

    let mut div_u = ScalarField::zeros(grid);
    for (i, row) in entries.iter().enumerate() {
        for (j, a_ij) in row.iter().enumerate() {
            div_u.add_scaled(1.0, &a_ij.zip_map(jac[j].component(i), |x, y| x * y));
        }
    }

    let mut div_az = ScalarField::zeros(grid);
    for (i, [a_i0, a_i1]) in entries.iter().enumerate() {
        let mut az = a_i0.zip_map(z.component(0), |x, y| x * y);
        az.add_scaled(1.0, &a_i1.zip_map(z.component(1), |x, y| x * y));
        div_az.add_scaled(1.0, &Spectrum::forward(&az).derivative(i).inverse());
    }
    Ok(LagrangianOps { grad_u, div_u, div_az })
}
