//! Precomputed 2D spectral kernels for the time stepper.

use rustfft::num_complex::Complex64;

use crate::fields::spectral::{conjugate_index, derivative_wave_vector, fft_forward, fft_inverse};
use crate::fields::Grid;

pub(crate) struct SpectralOps {
    grid: Grid,
    /// `2πκ` with Nyquist components dropped.
    pub kappa: Vec<[f64; 2]>,
    /// `|2πκ|²`
    pub kappa2: Vec<f64>,
    /// `4π²|k|²`, the symbol of `−Δ`.
    pub lap: Vec<f64>,
    /// Inside the 2/3 box.
    pub keep: Vec<bool>,
    conj: Vec<usize>,
    buf: Vec<Complex64>,
}

impl SpectralOps {
    pub fn new(grid: Grid) -> Self {
        assert_eq!(grid.d(), 2, "the time stepper is two-dimensional");
        let two_pi = 2.0 * std::f64::consts::PI;
        let n = grid.n() as i64;
        let len = grid.len();
        let mut ops = SpectralOps {
            grid,
            kappa: Vec::with_capacity(len),
            kappa2: Vec::with_capacity(len),
            lap: Vec::with_capacity(len),
            keep: Vec::with_capacity(len),
            conj: Vec::with_capacity(len),
            buf: vec![Complex64::default(); len],
        };
        for i in 0..len {
            let k = grid.wave_vector(i);
            let kd = derivative_wave_vector(grid, i);
            let kappa = [two_pi * kd[0] as f64, two_pi * kd[1] as f64];
            ops.kappa.push(kappa);
            ops.kappa2.push(kappa[0] * kappa[0] + kappa[1] * kappa[1]);
            ops.lap.push(two_pi * two_pi * (k[0] * k[0] + k[1] * k[1]) as f64);
            ops.keep.push(3 * k[0].abs() < n && 3 * k[1].abs() < n);
            ops.conj.push(conjugate_index(grid, i));
        }
        ops
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::default(); self.grid.len()]
    }

    /// Unitary spectra of two real arrays with one FFT.
    pub fn forward2(&mut self, a: &[f64], b: &[f64], oa: &mut [Complex64], ob: &mut [Complex64]) {
        for ((slot, &x), &y) in self.buf.iter_mut().zip(a).zip(b) {
            *slot = Complex64::new(x, y);
        }
        fft_forward(self.grid, &mut self.buf);
        for i in 0..self.buf.len() {
            let c = self.buf[i];
            let cm = self.buf[self.conj[i]].conj();
            oa[i] = (c + cm) * 0.5;
            let d = (c - cm) * 0.5;
            ob[i] = Complex64::new(d.im, -d.re);
        }
    }

    /// Synthesis of two Hermitian spectra with one FFT.
    pub fn inverse2(&mut self, a: &[Complex64], b: &[Complex64], oa: &mut [f64], ob: &mut [f64]) {
        for ((slot, &x), &y) in self.buf.iter_mut().zip(a).zip(b) {
            *slot = x + Complex64::new(-y.im, y.re);
        }
        fft_inverse(self.grid, &mut self.buf);
        for ((c, ra), rb) in self.buf.iter().zip(oa.iter_mut()).zip(ob.iter_mut()) {
            *ra = c.re;
            *rb = c.im;
        }
    }

    /// Leray projection in place.
    pub fn project(&self, a: &mut [Complex64], b: &mut [Complex64]) {
        for i in 0..a.len() {
            let k2 = self.kappa2[i];
            if k2 == 0.0 {
                continue;
            }
            let [kx, ky] = self.kappa[i];
            let f = (a[i] * kx + b[i] * ky) / k2;
            a[i] -= f * kx;
            b[i] -= f * ky;
        }
    }

    /// `P̂` with `∇P` equal to the gradient part of the field `(a, b)`.
    pub fn potential(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        (0..a.len())
            .map(|i| {
                let k2 = self.kappa2[i];
                if k2 == 0.0 {
                    return Complex64::default();
                }
                let [kx, ky] = self.kappa[i];
                // −i(K·ĝ)/|K|²
                let s = (a[i] * kx + b[i] * ky) / k2;
                Complex64::new(s.im, -s.re)
            })
            .collect()
    }

    /// `Σ Re(conj(x)·y)` over both components: the `L₂` inner product by Parseval.
    pub fn dot(x: (&[Complex64], &[Complex64]), y: (&[Complex64], &[Complex64])) -> f64 {
        let part =
            |p: &[Complex64], q: &[Complex64]| p.iter().zip(q).map(|(a, b)| a.re * b.re + a.im * b.im).sum::<f64>();
        part(x.0, y.0) + part(x.1, y.1)
    }
}
