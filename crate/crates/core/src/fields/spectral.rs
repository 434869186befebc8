//! Fourier calculus on the unit torus with the convention `f(x) = Σ f̂_k e^{2πik·x}`.
//!
//! Coefficients are unitary (`f̂_k = N⁻ᵈ Σ f(x_j) e^{−2πik·x_j}`), so Parseval reads
//! `∫|f|² = Σ|f̂_k|²`. Odd-order derivatives drop the Nyquist index of the
//! differentiated axis; this keeps gradients of real fields real and makes
//! `div ∘ grad` agree with the projection used by [`leray_project`].

use std::any::{Any, TypeId};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::scalar::Real;

type PlanKey = (TypeId, usize, bool);

fn plan<T: Real>(n: usize, direction: FftDirection) -> Arc<dyn Fft<T>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Any + Send + Sync>>>> = OnceLock::new();
    let key = (TypeId::of::<T>(), n, direction == FftDirection::Forward);
    let mut plans = PLANS.get_or_init(Default::default).lock().expect("plan cache poisoned");
    let entry = plans.entry(key).or_insert_with(|| {
        let fft: Arc<dyn Fft<T>> = FftPlanner::new().plan_fft(n, direction);
        Arc::new(fft)
    });
    entry.downcast_ref::<Arc<dyn Fft<T>>>().expect("plan cache keyed by type").clone()
}

/// Unnormalised d-dimensional transform in place.
fn transform<T: Real>(grid: Grid, data: &mut [Complex<T>], direction: FftDirection) {
    let n = grid.n();
    let fft = plan::<T>(n, direction);
    let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if grid.d() < 2 {
        return;
    }
    let mut lines = vec![Complex::default(); data.len()];
    for axis in 1..grid.d() {
        let stride = grid.stride(axis);
        let block = stride * n;
        for outer in 0..data.len() / block {
            for inner in 0..stride {
                let line = &mut lines[(outer * stride + inner) * n..][..n];
                let base = outer * block + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
            }
        }
        fft.process_with_scratch(&mut lines, &mut scratch);
        for outer in 0..data.len() / block {
            for inner in 0..stride {
                let line = &lines[(outer * stride + inner) * n..][..n];
                let base = outer * block + inner;
                for (j, &value) in line.iter().enumerate() {
                    data[base + j * stride] = value;
                }
            }
        }
    }
}

/// Forward transform with unitary scaling.
pub fn fft_forward<T: Real>(grid: Grid, data: &mut [Complex<T>]) {
    transform(grid, data, FftDirection::Forward);
    let scale = T::one() / T::of(grid.len() as f64);
    data.iter_mut().for_each(|c| *c = *c * scale);
}

/// Synthesis `f(x) = Σ f̂_k e^{2πik·x}`.
pub fn fft_inverse<T: Real>(grid: Grid, data: &mut [Complex<T>]) {
    transform(grid, data, FftDirection::Inverse);
}

/// Flat index of the wave vector `−k`.
pub fn conjugate_index(grid: Grid, flat: usize) -> usize {
    let n = grid.n();
    let m = grid.multi_index(flat);
    grid.flat([(n - m[0]) % n, (n - m[1]) % n, (n - m[2]) % n])
}

/// Wave vector used by first-order derivatives: the Nyquist component is zeroed.
pub fn derivative_wave_vector(grid: Grid, flat: usize) -> [i64; 3] {
    let m = grid.multi_index(flat);
    let mut k = grid.wave_vector(flat);
    for (a, ka) in k.iter_mut().enumerate().take(grid.d()) {
        if grid.is_nyquist(m[a]) {
            *ka = 0;
        }
    }
    k
}

fn norm_sq(k: [i64; 3]) -> i64 {
    k.iter().map(|c| c * c).sum()
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    grid: Grid,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn forward(f: &ScalarField<T>) -> Self {
        let grid = f.grid();
        let mut coeffs: Vec<Complex<T>> = f.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft_forward(grid, &mut coeffs);
        Spectrum { grid, coeffs }
    }

    /// Transforms two real fields with one complex FFT.
    pub fn forward_pair(a: &ScalarField<T>, b: &ScalarField<T>) -> (Self, Self) {
        let grid = a.grid();
        assert_eq!(grid, b.grid(), "fields live on different grids");
        let mut packed: Vec<Complex<T>> =
            a.values().iter().zip(b.values()).map(|(&x, &y)| Complex::new(x, y)).collect();
        fft_forward(grid, &mut packed);
        let half = T::of(0.5);
        let (mut ca, mut cb) = (Vec::with_capacity(packed.len()), Vec::with_capacity(packed.len()));
        for (i, &c) in packed.iter().enumerate() {
            let cm = packed[conjugate_index(grid, i)].conj();
            ca.push((c + cm) * half);
            // (c − cm)/(2i)
            let d = (c - cm) * half;
            cb.push(Complex::new(d.im, -d.re));
        }
        (Spectrum { grid, coeffs: ca }, Spectrum { grid, coeffs: cb })
    }

    pub fn from_coeffs(grid: Grid, coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} coefficients for {} nodes", coeffs.len(), grid.len())));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        Spectrum { grid, coeffs: vec![Complex::default(); grid.len()] }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Real part of the synthesis; exact for Hermitian coefficient sets.
    pub fn inverse(&self) -> ScalarField<T> {
        let mut data = self.coeffs.clone();
        fft_inverse(self.grid, &mut data);
        ScalarField::from_vec(self.grid, data.into_iter().map(|c| c.re).collect())
    }

    /// Synthesises two Hermitian spectra with one complex FFT.
    pub fn inverse_pair(a: &Self, b: &Self) -> (ScalarField<T>, ScalarField<T>) {
        let grid = a.grid;
        let mut data: Vec<Complex<T>> =
            a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| x + Complex::new(-y.im, y.re)).collect();
        fft_inverse(grid, &mut data);
        let re = data.iter().map(|c| c.re).collect();
        let im = data.iter().map(|c| c.im).collect();
        (ScalarField::from_vec(grid, re), ScalarField::from_vec(grid, im))
    }

    pub fn mean(&self) -> T {
        self.coeffs[0].re
    }

    /// Multiplies every coefficient by `symbol(k)` for its wave vector `k`.
    pub fn apply(&self, symbol: impl Fn(usize, [i64; 3]) -> Complex<T>) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, &c)| c * symbol(i, self.grid.wave_vector(i))).collect();
        Spectrum { grid: self.grid, coeffs }
    }

    /// `∂_axis`
    pub fn derivative(&self, axis: usize) -> Self {
        let grid = self.grid;
        let two_pi = T::of(2.0) * T::PI();
        self.apply(|i, _| {
            let k = derivative_wave_vector(grid, i)[axis];
            Complex::new(T::zero(), two_pi * T::of(k as f64))
        })
    }

    pub fn laplacian(&self) -> Self {
        let c = -T::of(4.0) * T::PI() * T::PI();
        self.apply(|_, k| Complex::new(c * T::of(norm_sq(k) as f64), T::zero()))
    }

    /// `Δ⁻¹` on the zero-mean part; the mean mode is set to zero.
    pub fn inv_laplacian(&self) -> Self {
        let c = -T::of(4.0) * T::PI() * T::PI();
        self.apply(|_, k| match norm_sq(k) {
            0 => Complex::default(),
            k2 => Complex::new(T::one() / (c * T::of(k2 as f64)), T::zero()),
        })
    }

    /// Zeroes every mode outside the 2/3 box `3|k_a| < n`.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        let n = grid.n() as i64;
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let k = grid.wave_vector(i);
            if k.iter().any(|ka| 3 * ka.abs() >= n) {
                *c = Complex::default();
            }
        }
    }

    /// `Σ_k w(k)|f̂_k|²`
    pub fn weighted_energy(&self, w: impl Fn(usize, [i64; 3]) -> T) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, c)| acc + w(i, self.grid.wave_vector(i)) * c.norm_sqr())
    }
}

/// Scalar or vector field, for operators whose output rank depends on the input.
#[derive(Clone, Debug, PartialEq)]
pub enum Field<T> {
    Scalar(ScalarField<T>),
    Vector(VectorField<T>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Div,
    Curl,
    Laplacian,
    InvLaplacian,
}

/// Applies `op` by its exact Fourier symbol.
pub fn spectral_gradient<T: Real>(f: &Field<T>, op: DiffOp) -> Result<Field<T>> {
    match (op, f) {
        (DiffOp::Grad, Field::Scalar(s)) => Ok(Field::Vector(gradient(s))),
        (DiffOp::Grad, Field::Vector(_)) => {
            Err(Error::Domain("gradient of a vector field is a matrix field; use `jacobian`".into()))
        }
        (DiffOp::Div, Field::Vector(v)) => Ok(Field::Scalar(divergence(v))),
        (DiffOp::Div, Field::Scalar(_)) => Err(Error::Domain("divergence of a scalar field".into())),
        (DiffOp::Curl, Field::Vector(v)) => curl(v),
        (DiffOp::Curl, Field::Scalar(_)) => Err(Error::Domain("curl of a scalar field".into())),
        (DiffOp::Laplacian, Field::Scalar(s)) => Ok(Field::Scalar(laplacian(s))),
        (DiffOp::Laplacian, Field::Vector(v)) => Ok(Field::Vector(v.map_components(laplacian))),
        (DiffOp::InvLaplacian, Field::Scalar(s)) => inv_laplacian(s).map(Field::Scalar),
        (DiffOp::InvLaplacian, Field::Vector(v)) => {
            let comps = v.components().iter().map(inv_laplacian).collect::<Result<Vec<_>>>()?;
            Ok(Field::Vector(VectorField::from_components(comps)))
        }
    }
}

/// Spectra of every component, pairing components to halve the FFT count.
pub fn vector_spectra<T: Real>(v: &VectorField<T>) -> Vec<Spectrum<T>> {
    let comps = v.components();
    let mut out = Vec::with_capacity(comps.len());
    let mut chunks = comps.chunks(2);
    for chunk in &mut chunks {
        match chunk {
            [a, b] => {
                let (sa, sb) = Spectrum::forward_pair(a, b);
                out.push(sa);
                out.push(sb);
            }
            [a] => out.push(Spectrum::forward(a)),
            _ => unreachable!(),
        }
    }
    out
}

/// Inverse of [`vector_spectra`].
pub fn vector_from_spectra<T: Real>(spectra: &[Spectrum<T>]) -> VectorField<T> {
    let mut comps = Vec::with_capacity(spectra.len());
    for chunk in spectra.chunks(2) {
        match chunk {
            [a, b] => {
                let (fa, fb) = Spectrum::inverse_pair(a, b);
                comps.push(fa);
                comps.push(fb);
            }
            [a] => comps.push(a.inverse()),
            _ => unreachable!(),
        }
    }
    VectorField::from_components(comps)
}

pub fn gradient<T: Real>(f: &ScalarField<T>) -> VectorField<T> {
    let s = Spectrum::forward(f);
    let d = f.grid().d();
    let parts: Vec<_> = (0..d).map(|a| s.derivative(a)).collect();
    vector_from_spectra(&parts)
}

/// `J[a][b] = ∂_b v_a`, returned as one gradient field per component.
pub fn jacobian<T: Real>(v: &VectorField<T>) -> Vec<VectorField<T>> {
    let d = v.dim();
    vector_spectra(v)
        .iter()
        .map(|s| vector_from_spectra(&(0..d).map(|b| s.derivative(b)).collect::<Vec<_>>()))
        .collect()
}

pub fn divergence<T: Real>(v: &VectorField<T>) -> ScalarField<T> {
    let spectra = vector_spectra(v);
    let mut acc = Spectrum::zeros(v.grid());
    for (a, s) in spectra.iter().enumerate() {
        for (o, c) in acc.coeffs.iter_mut().zip(s.derivative(a).coeffs) {
            *o = *o + c;
        }
    }
    acc.inverse()
}

/// Scalar vorticity in 2D, vector curl in 3D.
pub fn curl<T: Real>(v: &VectorField<T>) -> Result<Field<T>> {
    let s = vector_spectra(v);
    // ∂_a v_b − ∂_b v_a
    let diff = |a: usize, b: usize| {
        let p = s[b].derivative(a);
        let q = s[a].derivative(b);
        let coeffs = p.coeffs.iter().zip(&q.coeffs).map(|(&x, &y)| x - y).collect();
        Spectrum { grid: v.grid(), coeffs }
    };
    match v.dim() {
        2 => Ok(Field::Scalar(diff(0, 1).inverse())),
        3 => {
            let parts = [diff(1, 2), diff(2, 0), diff(0, 1)];
            Ok(Field::Vector(vector_from_spectra(&parts)))
        }
        d => Err(Error::Domain(format!("curl in dimension {d}"))),
    }
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    Spectrum::forward(f).laplacian().inverse()
}

/// Zero-mean solution `u` of `Δu = f`.
pub fn inv_laplacian<T: Real>(f: &ScalarField<T>) -> Result<ScalarField<T>> {
    let s = Spectrum::forward(f);
    let scale = f.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let mean = s.mean();
    if mean.abs() > T::of(1e4) * T::epsilon() * scale {
        return Err(Error::MeanViolation { mean: mean.as_f64() });
    }
    Ok(s.inv_laplacian().inverse())
}

/// Helmholtz split `v = v_df + ∇p` with `div v_df = 0` and `∇p ⟂ v_df` in `L₂`.
pub fn leray_project<T: Real>(v: &VectorField<T>) -> (VectorField<T>, VectorField<T>) {
    let grid = v.grid();
    let spectra = vector_spectra(v);
    let d = spectra.len();
    let mut df: Vec<Spectrum<T>> = spectra.clone();
    let mut gp: Vec<Spectrum<T>> = (0..d).map(|_| Spectrum::zeros(grid)).collect();
    for i in 0..grid.len() {
        let k = derivative_wave_vector(grid, i);
        let k2 = norm_sq(k);
        if k2 == 0 {
            continue;
        }
        let kdotv = (0..d).fold(Complex::default(), |acc, a| acc + spectra[a].coeffs[i] * T::of(k[a] as f64));
        let factor = kdotv / T::of(k2 as f64);
        for a in 0..d {
            let g = factor * T::of(k[a] as f64);
            gp[a].coeffs[i] = g;
            df[a].coeffs[i] = spectra[a].coeffs[i] - g;
        }
    }
    (vector_from_spectra(&df), vector_from_spectra(&gp))
}

/// Homogeneous Sobolev seminorm `(Σ_{k≠0} (2π|k|)^{2s} |f̂_k|²)^{1/2}` over every mode.
pub fn hs_seminorm<T: Real>(f: &ScalarField<T>, s: f64) -> Result<T> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::Domain(format!("Sobolev order s = {s} is negative")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let energy = Spectrum::forward(f).weighted_energy(|_, k| match norm_sq(k) {
        0 => T::zero(),
        k2 => T::of((two_pi * (k2 as f64).sqrt()).powf(2.0 * s)),
    });
    Ok(energy.sqrt())
}

/// `f = mean + low + high` split at `|k| = n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Truncation<T> {
    pub mean: T,
    /// Modes with `1 ≤ |k| ≤ n`.
    pub low: ScalarField<T>,
    /// Modes with `|k| > n`.
    pub high: ScalarField<T>,
}

pub fn fourier_truncate<T: Real>(f: &ScalarField<T>, n: usize) -> Result<Truncation<T>> {
    if n == 0 {
        return Err(Error::Domain("truncation radius must be at least 1".into()));
    }
    let s = Spectrum::forward(f);
    let cutoff = (n * n) as i64;
    let low = s.apply(|_, k| match norm_sq(k) {
        k2 if k2 >= 1 && k2 <= cutoff => Complex::new(T::one(), T::zero()),
        _ => Complex::default(),
    });
    let high = s.apply(|_, k| match norm_sq(k) {
        k2 if k2 > cutoff => Complex::new(T::one(), T::zero()),
        _ => Complex::default(),
    });
    let (low, high) = Spectrum::inverse_pair(&low, &high);
    Ok(Truncation { mean: s.mean(), low, high })
}
