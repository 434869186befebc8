use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::scalar::Real;

/// Real samples of a function on the periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: Grid,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    /// Wraps `values`; rejects a wrong length or any non-finite sample.
    pub fn new(grid: Grid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(ScalarField { grid, values })
    }

    /// Unchecked constructor for values produced by trusted internal arithmetic.
    pub(crate) fn from_vec(grid: Grid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: Grid, c: T) -> Self {
        ScalarField { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at every node; unused coordinates are passed as zero.
    pub fn from_fn(grid: Grid, f: impl Fn([T; 3]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScalarField::from_vec(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        ScalarField::from_vec(self.grid, values)
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: T) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `∫ f dx`
    pub fn integral(&self) -> T {
        self.sum() * self.grid.cell_volume::<T>()
    }

    pub fn mean(&self) -> T {
        self.sum() / T::of(self.values.len() as f64)
    }

    fn sum(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc + v)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// `L₂` inner product.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let s = self.values.iter().zip(&other.values).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        s * self.grid.cell_volume::<T>()
    }

    /// `‖f‖_p`; `p = ∞` gives the nodal maximum of `|f|`.
    pub fn lp_norm(&self, p: f64) -> Result<T> {
        lp_of_abs(self.grid, self.values.iter().map(|v| v.abs()), p)
    }

    pub fn l2_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        self.values.iter_mut().for_each(|v| *v -= m);
    }
}

/// Shared quadrature for `(∫|g|^p)^{1/p}` given nodal magnitudes.
pub(crate) fn lp_of_abs<T: Real>(grid: Grid, abs: impl Iterator<Item = T>, p: f64) -> Result<T> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("Lebesgue exponent p = {p} is below 1")));
    }
    if p.is_infinite() {
        return Ok(abs.fold(T::zero(), T::max));
    }
    let sum = if p == 2.0 {
        abs.fold(T::zero(), |acc, v| acc + v * v)
    } else {
        let pt = T::of(p);
        abs.fold(T::zero(), |acc, v| acc + v.powf(pt))
    };
    Ok((sum * grid.cell_volume::<T>()).powf(T::of(1.0 / p)))
}

impl<T: Real> Add for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn add(self, rhs: Self) -> ScalarField<T> {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl<T: Real> Sub for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn sub(self, rhs: Self) -> ScalarField<T> {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl<T: Real> Mul<T> for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn mul(self, rhs: T) -> ScalarField<T> {
        self.map(|a| a * rhs)
    }
}

impl<T: Real> Neg for &ScalarField<T> {
    type Output = ScalarField<T>;
    fn neg(self) -> ScalarField<T> {
        self.map(|a| -a)
    }
}

/// `d` scalar components sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    components: Vec<ScalarField<T>>,
}

impl<T: Real> VectorField<T> {
    pub fn new(components: Vec<ScalarField<T>>) -> Result<Self> {
        let Some(first) = components.first() else {
            return Err(Error::GridMismatch("vector field without components".into()));
        };
        let grid = first.grid();
        if components.len() != grid.d() {
            return Err(Error::GridMismatch(format!(
                "{} components on a {}-dimensional grid",
                components.len(),
                grid.d()
            )));
        }
        if components.iter().any(|c| c.grid() != grid) {
            return Err(Error::GridMismatch("components on different grids".into()));
        }
        Ok(VectorField { components })
    }

    pub(crate) fn from_components(components: Vec<ScalarField<T>>) -> Self {
        debug_assert!(components.iter().all(|c| c.grid() == components[0].grid()));
        VectorField { components }
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField { components: (0..grid.d()).map(|_| ScalarField::zeros(grid)).collect() }
    }

    pub fn constant(grid: Grid, c: [T; 3]) -> Self {
        VectorField { components: (0..grid.d()).map(|a| ScalarField::constant(grid, c[a])).collect() }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([T; 3]) -> [T; 3]) -> Self {
        let samples: Vec<[T; 3]> = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        let components =
            (0..grid.d()).map(|a| ScalarField::from_vec(grid, samples.iter().map(|s| s[a]).collect())).collect();
        VectorField { components }
    }

    pub fn grid(&self) -> Grid {
        self.components[0].grid()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize) -> &ScalarField<T> {
        &self.components[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut ScalarField<T> {
        &mut self.components[a]
    }

    pub fn components(&self) -> &[ScalarField<T>] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField<T>> {
        self.components
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField<T>) -> ScalarField<T>) -> Self {
        VectorField { components: self.components.iter().map(f).collect() }
    }

    pub fn add_scaled(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.add_scaled(alpha, b);
        }
    }

    pub fn scale(&mut self, alpha: T) {
        self.components.iter_mut().for_each(|c| c.scale(alpha));
    }

    /// Componentwise product with a scalar weight.
    pub fn weighted(&self, w: &ScalarField<T>) -> Self {
        self.map_components(|c| c.zip_map(w, |a, b| a * b))
    }

    /// Pointwise Euclidean length.
    pub fn magnitude(&self) -> ScalarField<T> {
        let grid = self.grid();
        let values = (0..grid.len())
            .map(|i| self.components.iter().fold(T::zero(), |acc, c| acc + c.values()[i].powi(2)).sqrt())
            .collect();
        ScalarField::from_vec(grid, values)
    }

    pub fn dot(&self, other: &Self) -> T {
        self.components.iter().zip(&other.components).fold(T::zero(), |acc, (a, b)| acc + a.dot(b))
    }

    pub fn l2_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    /// `‖ |v| ‖_p` with the Euclidean pointwise norm.
    pub fn lp_norm(&self, p: f64) -> Result<T> {
        if p == 2.0 {
            return Ok(self.l2_norm());
        }
        let mag = self.magnitude();
        lp_of_abs(self.grid(), mag.values().iter().copied(), p)
    }

    pub fn integral(&self) -> Vec<T> {
        self.components.iter().map(ScalarField::integral).collect()
    }

    pub fn mean(&self) -> Vec<T> {
        self.components.iter().map(ScalarField::mean).collect()
    }
}

impl<T: Real> Add for &VectorField<T> {
    type Output = VectorField<T>;
    fn add(self, rhs: Self) -> VectorField<T> {
        let components = self.components.iter().zip(&rhs.components).map(|(a, b)| a + b).collect();
        VectorField { components }
    }
}

impl<T: Real> Sub for &VectorField<T> {
    type Output = VectorField<T>;
    fn sub(self, rhs: Self) -> VectorField<T> {
        let components = self.components.iter().zip(&rhs.components).map(|(a, b)| a - b).collect();
        VectorField { components }
    }
}

impl<T: Real> Mul<T> for &VectorField<T> {
    type Output = VectorField<T>;
    fn mul(self, rhs: T) -> VectorField<T> {
        self.map_components(|c| c * rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sin_x(n: usize) -> ScalarField<f64> {
        ScalarField::from_fn(Grid::square(n), |x: [f64; 3]| (2.0 * PI * x[0]).sin())
    }

    #[test]
    fn constant_field_has_its_modulus_as_every_norm() {
        let f = ScalarField::<f64>::constant(Grid::square(16), -2.5);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((f.lp_norm(p).unwrap() - 2.5).abs() < 1e-13, "p = {p}");
        }
    }

    #[test]
    fn sine_norms_match_closed_forms() {
        let f = sin_x(32);
        assert!((f.lp_norm(2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-14);
        // ∫ sin⁴(2πx) dx = 3/8
        assert!((f.lp_norm(4.0).unwrap() - 0.375f64.powf(0.25)).abs() < 1e-14);
        assert!((f.lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn exponent_below_one_is_rejected() {
        assert!(matches!(sin_x(8).lp_norm(0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn construction_checks_length_and_finiteness() {
        let g = Grid::square(8);
        assert!(ScalarField::new(g, vec![0.0; 63]).is_err());
        let mut v = vec![0.0; 64];
        v[5] = f64::NAN;
        assert!(matches!(ScalarField::new(g, v), Err(Error::NonFinite { index: 5 })));
    }

    #[test]
    fn vector_field_requires_matching_grids() {
        let a = ScalarField::<f64>::zeros(Grid::square(8));
        let b = ScalarField::<f64>::zeros(Grid::square(16));
        assert!(VectorField::new(vec![a.clone(), b]).is_err());
        assert!(VectorField::new(vec![a.clone()]).is_err());
        assert!(VectorField::new(vec![a.clone(), a]).is_ok());
    }

    #[test]
    fn works_in_single_precision() {
        let f = ScalarField::<f32>::from_fn(Grid::square(16), |x| (2.0 * std::f32::consts::PI * x[0]).sin());
        assert!((f.lp_norm(2.0).unwrap() - 0.5f32.sqrt()).abs() < 1e-6);
    }
}
