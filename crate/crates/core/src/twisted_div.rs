//! Fixed-point solution of the twisted divergence equation `div(Aw) = g` for `det A ≡ 1`.
//!
//! With `g = div R`, the map `Φ(v) = ∇Δ⁻¹div((Id − A)v + R)` has `w` as its fixed point,
//! and it contracts when `Id − A` is small. Time is a parameter: every slice is solved
//! on its own.

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;

use crate::error::{Error, Result};
use crate::fields::{gradient, hs_seminorm, inv_laplacian, leray_project, Grid};
use crate::lagrangian::{lagrangian_ops, op_norm, MatrixField};
use crate::{ScalarField, VectorField};

/// `A(t)` and `R(t)` sampled at common instants on one grid.
#[derive(Clone, Debug)]
pub struct TwistedProblem {
    pub times: Vec<f64>,
    pub a: Vec<MatrixField>,
    pub r: Vec<VectorField>,
    /// Stop when successive iterates differ by less than `tol·‖w‖₂`.
    pub tol: f64,
}

/// Smallness quantities of the coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Smallness {
    /// `max_{t,y,i,j} |(Id − A)_{ij}|`
    pub id_minus_a_entry: f64,
    /// `max_{t,y} ‖Id − A‖` in the spectral norm.
    pub id_minus_a_op: f64,
    /// `‖A_t‖_{L₂(0,T;L₆)}` by forward differences, with the Frobenius norm pointwise.
    pub a_t_l2_l6: f64,
    /// `max_{t,y} |det A − 1|`
    pub det_deviation: f64,
}

impl TwistedProblem {
    pub fn new(times: Vec<f64>, a: Vec<MatrixField>, r: Vec<VectorField>, tol: f64) -> Result<Self> {
        if times.is_empty() || a.len() != times.len() || r.len() != times.len() {
            return Err(Error::Domain(format!("{} times, {} coefficients, {} sources", times.len(), a.len(), r.len())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("slice times must increase".into()));
        }
        let grid = a[0].grid();
        if a.iter().any(|m| m.grid() != grid) || r.iter().any(|v| v.grid() != grid || v.dim() != 2) {
            return Err(Error::GridMismatch("coefficients and sources must share one planar grid".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {tol} must be positive")));
        }
        Ok(TwistedProblem { times, a, r, tol })
    }

    pub fn grid(&self) -> Grid {
        self.a[0].grid()
    }

    pub fn smallness(&self) -> Smallness {
        let mut s = Smallness { id_minus_a_entry: 0.0, id_minus_a_op: 0.0, a_t_l2_l6: 0.0, det_deviation: 0.0 };
        for a in &self.a {
            for m in a.values() {
                let b = [[1.0 - m[0][0], -m[0][1]], [-m[1][0], 1.0 - m[1][1]]];
                s.id_minus_a_entry = b.iter().flatten().fold(s.id_minus_a_entry, |acc, v| acc.max(v.abs()));
                s.id_minus_a_op = s.id_minus_a_op.max(op_norm(&b));
                s.det_deviation = s.det_deviation.max((crate::lagrangian::det(m) - 1.0).abs());
            }
        }
        let cell = self.grid().cell_volume::<f64>();
        let sq: f64 = self
            .a
            .windows(2)
            .zip(self.times.windows(2))
            .map(|(a, t)| {
                let dt = t[1] - t[0];
                let l6: f64 = a[0]
                    .values()
                    .iter()
                    .zip(a[1].values())
                    .map(|(p, q)| {
                        let f2: f64 = (0..4).map(|k| (q[k / 2][k % 2] - p[k / 2][k % 2]).powi(2)).sum();
                        f2.powi(3) / dt.powi(6)
                    })
                    .sum::<f64>()
                    * cell;
                l6.powf(1.0 / 3.0) * dt
            })
            .sum();
        s.a_t_l2_l6 = sq.sqrt();
        s
    }
}

/// `Φ(v) = ∇Δ⁻¹div((Id − A)v + R)` on one slice.
pub fn phi(a: &MatrixField, r: &VectorField, v: &VectorField) -> Result<VectorField> {
    let (vx, vy) = (v.component(0).values(), v.component(1).values());
    let mut f = [r.component(0).clone(), r.component(1).clone()];
    for (k, m) in a.values().iter().enumerate() {
        for (i, fi) in f.iter_mut().enumerate() {
            let own = if i == 0 { vx[k] } else { vy[k] };
            fi.values_mut()[k] += own - (m[i][0] * vx[k] + m[i][1] * vy[k]);
        }
    }
    let f = VectorField::new(f.to_vec())?;
    // ∇Δ⁻¹div is the gradient part of the Helmholtz split.
    let (_, grad_part) = leray_project(&f);
    Ok(grad_part)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Converged,
    /// Successive differences grew twice in a row.
    Diverged,
    /// Neither converged nor diverged within the iteration budget.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceLog {
    pub t: f64,
    pub outcome: Outcome,
    pub iterations: usize,
    /// `‖v_{k+1} − v_k‖₂` for every iteration.
    pub increments: Vec<f64>,
    /// Geometric mean ratio of the last increments, or the final ratio on divergence.
    pub measured_factor: Option<f64>,
    /// `‖div(Aw) − g‖₂` with `div(Aw)` from the product-first formula.
    pub residual: f64,
    pub g_l2: f64,
}

#[derive(Clone, Debug)]
pub struct TwistedSolution {
    pub w: Vec<VectorField>,
    pub slices: Vec<SliceLog>,
    pub converged: bool,
    /// `‖w_t‖_{L_{4/3}(0,T;L_{3/2})}` by forward differences.
    pub w_t_l43_l32: f64,
}

fn solve_slice(a: &MatrixField, r: &VectorField, t: f64, tol: f64, maxit: usize) -> Result<(VectorField, SliceLog)> {
    let mut v = VectorField::zeros(a.grid());
    let mut increments = Vec::new();
    let mut outcome = Outcome::Stalled;
    for _ in 0..maxit {
        let next = phi(a, r, &v)?;
        let inc = (&next - &v).l2_norm();
        increments.push(inc);
        v = next;
        let scale = v.l2_norm().max(f64::MIN_POSITIVE);
        if inc <= tol * scale || inc == 0.0 {
            outcome = Outcome::Converged;
            break;
        }
        if let [.., d0, d1, d2] = increments[..] {
            if d1 > d0 && d2 > d1 {
                outcome = Outcome::Diverged;
                break;
            }
        }
    }
    let g = crate::fields::divergence(r);
    let residual = (&lagrangian_ops(a, &v)?.div_az - &g).l2_norm();
    let measured_factor = match increments.len() {
        0..=2 => None,
        // The growth that triggered detection.
        len if outcome == Outcome::Diverged => Some(increments[len - 1] / increments[len - 2]),
        len => {
            let k = len.min(6) - 1;
            let (first, last) = (increments[len - 1 - k], increments[len - 1]);
            (first > 0.0 && last > 0.0).then(|| (last / first).powf(1.0 / k as f64))
        }
    };
    let log =
        SliceLog { t, outcome, iterations: increments.len(), increments, measured_factor, residual, g_l2: g.l2_norm() };
    Ok((v, log))
}

/// Iterates `Φ` from `v = 0` on every slice.
///
/// A slice whose increments grow twice in a row stops with [`Error::Diverged`], carrying the
/// measured expansion factor.
pub fn solve_twisted(problem: &TwistedProblem, maxit: usize) -> Result<TwistedSolution> {
    let workers = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    let m = problem.times.len();
    let block = m.div_ceil(workers).max(1);
    let results: Vec<(VectorField, SliceLog)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..m)
            .step_by(block)
            .map(|start| {
                s.spawn(move || {
                    (start..(start + block).min(m))
                        .map(|k| solve_slice(&problem.a[k], &problem.r[k], problem.times[k], problem.tol, maxit))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("slice worker panicked")).collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    for (k, (_, log)) in results.iter().enumerate() {
        if log.outcome == Outcome::Diverged {
            let factor = log.measured_factor.unwrap_or(f64::INFINITY);
            info!("slice {k} diverged after {} iterations, expansion {factor:.4}", log.iterations);
            return Err(Error::Diverged { slice: k, factor });
        }
    }
    let (w, slices): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let converged = slices.iter().all(|s| s.outcome == Outcome::Converged);
    let w_t_l43_l32 = bochner(&problem.times, &w, 4.0 / 3.0, |d| d.lp_norm(1.5))?;
    Ok(TwistedSolution { w, slices, converged, w_t_l43_l32 })
}

/// `‖z_t‖_{L_q(0,T;X)}` of forward differences.
fn bochner(times: &[f64], z: &[VectorField], q: f64, norm: impl Fn(&VectorField) -> Result<f64>) -> Result<f64> {
    let mut acc = 0.0;
    for (w, t) in z.windows(2).zip(times.windows(2)) {
        let dt = t[1] - t[0];
        let mut d = &w[1] - &w[0];
        d.scale(1.0 / dt);
        acc += norm(&d)?.powf(q) * dt;
    }
    Ok(acc.powf(1.0 / q))
}

/// `‖·‖_X = ‖z‖_{L₄L₂} + ‖z‖_{L₂H¹} + ‖z_t‖_{L_{4/3}L_{3/2}}` on a sampled series.
pub fn x_norm(times: &[f64], z: &[VectorField]) -> Result<f64> {
    let dts: Vec<f64> = if times.len() > 1 { times.windows(2).map(|w| w[1] - w[0]).collect() } else { vec![1.0] };
    // Trapezoid weights.
    let weight = |k: usize| {
        let left = if k > 0 { dts[k - 1] } else { 0.0 };
        let right = dts.get(k).copied().unwrap_or(0.0);
        if times.len() == 1 {
            1.0
        } else {
            0.5 * (left + right)
        }
    };
    let (mut l4l2, mut l2h1) = (0.0, 0.0);
    for (k, zk) in z.iter().enumerate() {
        let l2 = zk.l2_norm();
        let grad_sq: f64 = zk.components().iter().map(|c| hs_seminorm(c, 1.0).map(|g| g * g)).sum::<Result<f64>>()?;
        l4l2 += weight(k) * l2.powi(4);
        l2h1 += weight(k) * (l2 * l2 + grad_sq);
    }
    let dt_part = if z.len() > 1 { bochner(times, z, 4.0 / 3.0, |d| d.lp_norm(1.5))? } else { 0.0 };
    Ok(l4l2.powf(0.25) + l2h1.sqrt() + dt_part)
}

/// Smooth random planar field series, linear in time between two random endpoints.
fn random_series(grid: Grid, times: &[f64], rng: &mut ChaCha8Rng) -> Vec<VectorField> {
    let mut endpoint = || {
        let modes: Vec<(f64, f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-3..=3) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..1.0),
                )
            })
            .collect();
        VectorField::from_fn(grid, |x: [f64; 3]| {
            let mut out = [0.0; 3];
            for &(k1, k2, a, b, ph) in &modes {
                let s = (2.0 * std::f64::consts::PI * (k1 * x[0] + k2 * x[1] + ph)).sin();
                out[0] += a * s;
                out[1] += b * s;
            }
            out
        })
    };
    let (start, end) = (endpoint(), endpoint());
    let (t0, t1) = (times[0], *times.last().expect("nonempty"));
    times
        .iter()
        .map(|&t| {
            let th = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            let mut z = start.clone();
            z.scale(1.0 - th);
            z.add_scaled(th, &end);
            z
        })
        .collect()
}

/// `max ‖Φ(v₂) − Φ(v₁)‖_X/‖v₂ − v₁‖_X` over `samples` random pairs.
pub fn contraction_estimate(problem: &TwistedProblem, samples: usize, seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Domain(format!("contraction estimate needs at least 2 samples, got {samples}")));
    }
    let grid = problem.grid();
    let zero_r = VectorField::zeros(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v1 = random_series(grid, &problem.times, &mut rng);
        let v2 = random_series(grid, &problem.times, &mut rng);
        let dv: Vec<VectorField> = v2.iter().zip(&v1).map(|(a, b)| a - b).collect();
        // Φ is affine, so Φ(v₂) − Φ(v₁) is the R = 0 map applied to v₂ − v₁.
        let dphi: Vec<VectorField> =
            problem.a.iter().zip(&dv).map(|(a, d)| phi(a, &zero_r, d)).collect::<Result<_>>()?;
        let den = x_norm(&problem.times, &dv)?;
        if den > 0.0 {
            worst = worst.max(x_norm(&problem.times, &dphi)? / den);
        }
    }
    Ok(worst)
}

/// `A = [[1, a(y)], [0, 1]]·[[1, 0], [b(x), 1]]` with `a = q cos 2π(y + φ)`, `b = q sin 2π(x + φ)`.
///
/// `det A = 1` and the largest entry of `Id − A` is `q` (for `q ≤ 1`).
pub fn composed_shear(grid: Grid, q: f64, phase: f64) -> MatrixField {
    use std::f64::consts::PI;
    MatrixField::from_fn(grid, |x| {
        let a = q * (2.0 * PI * (x[1] + phase)).cos();
        let b = q * (2.0 * PI * (x[0] + phase)).sin();
        [[1.0 + a * b, a], [b, 1.0]]
    })
}

/// Constant `A = [[d, −q], [−q, d]]` with `d = (1 + q²)^{1/2}`.
///
/// The largest entry of `Id − A` is `q`, yet `Id − A` has the eigenvalue `1 − d − q`, below −1
/// once `q > 3/4`, so `Φ` expands the Fourier modes along `(1, −1)`.
pub fn adversarial_coefficient(grid: Grid, q: f64) -> MatrixField {
    let d = (1.0 + q * q).sqrt();
    MatrixField::from_fn(grid, |_| [[d, -q], [-q, d]])
}

/// `w = ∇Δ⁻¹div R`, the untwisted solution.
pub fn untwisted(r: &VectorField) -> Result<VectorField> {
    let mut g: ScalarField = crate::fields::divergence(r);
    g.subtract_mean();
    Ok(gradient(&inv_laplacian(&g)?))
}
