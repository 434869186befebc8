use log::warn;
use std::num::NonZeroUsize;

use super::matrix::{mat_mul, op_norm, Mat2, MatrixField, IDENTITY};
use crate::error::{Error, Result};
use crate::fields::{jacobian, Grid};
use crate::interp::Periodic2;
use crate::{ScalarField, VectorField};

/// One velocity sample with its spatial gradient, ready for interpolation.
#[derive(Clone, Debug)]
pub struct VelocitySlice {
    pub t: f64,
    v: [ScalarField; 2],
    /// `grad[a][b] = ∂_b v_a`
    grad: Option<[[ScalarField; 2]; 2]>,
}

impl VelocitySlice {
    pub fn new(t: f64, v: &VectorField, with_gradient: bool) -> Result<Self> {
        if v.grid().d() != 2 {
            return Err(Error::Domain("flow maps are planar".into()));
        }
        let grad = with_gradient.then(|| {
            let j = jacobian(v);
            [0, 1].map(|a| [0, 1].map(|b| j[a].component(b).clone()))
        });
        Ok(VelocitySlice { t, v: [v.component(0).clone(), v.component(1).clone()], grad })
    }

    pub fn grid(&self) -> Grid {
        self.v[0].grid()
    }

    fn velocity(&self, p: [f64; 2]) -> [f64; 2] {
        [0, 1].map(|a| Periodic2::new(&self.v[a]).cubic_at(p))
    }

    fn gradient(&self, p: [f64; 2]) -> Mat2 {
        let g = self.grad.as_ref().expect("slice built with its gradient");
        [0, 1].map(|a| [0, 1].map(|b| Periodic2::new(&g[a][b]).cubic_at(p)))
    }
}

/// Position and (optionally) deformation gradient of one label.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Particle {
    x: [f64; 2],
    g: Mat2,
}

/// Linear-in-time blend of two slices.
struct Window<'a> {
    a: &'a VelocitySlice,
    b: &'a VelocitySlice,
    gradient: bool,
}

impl Window<'_> {
    /// Rates at fraction `theta` of the window; also returns `‖∇v(X)·G‖`.
    fn rate(&self, theta: f64, p: &Particle) -> (Particle, f64) {
        let (va, vb) = (self.a.velocity(p.x), self.b.velocity(p.x));
        let x = [0, 1].map(|i| (1.0 - theta) * va[i] + theta * vb[i]);
        if !self.gradient {
            return (Particle { x, g: [[0.0; 2]; 2] }, 0.0);
        }
        let (ja, jb) = (self.a.gradient(p.x), self.b.gradient(p.x));
        let j = [0, 1].map(|i| [0, 1].map(|k| (1.0 - theta) * ja[i][k] + theta * jb[i][k]));
        let g = mat_mul(&j, &p.g);
        (Particle { x, g }, op_norm(&g))
    }

    fn rk4(&self, p: &Particle, theta0: f64, dtheta: f64, dt: f64) -> (Particle, f64) {
        let axpy = |p: &Particle, k: &Particle, h: f64| Particle {
            x: [p.x[0] + h * k.x[0], p.x[1] + h * k.x[1]],
            g: [0, 1].map(|i| [0, 1].map(|j| p.g[i][j] + h * k.g[i][j])),
        };
        let (k1, lag) = self.rate(theta0, p);
        let (k2, _) = self.rate(theta0 + 0.5 * dtheta, &axpy(p, &k1, 0.5 * dt));
        let (k3, _) = self.rate(theta0 + 0.5 * dtheta, &axpy(p, &k2, 0.5 * dt));
        let (k4, _) = self.rate(theta0 + dtheta, &axpy(p, &k3, dt));
        let mut out = *p;
        for i in 0..2 {
            out.x[i] += dt / 6.0 * (k1.x[i] + 2.0 * k2.x[i] + 2.0 * k3.x[i] + k4.x[i]);
            for j in 0..2 {
                out.g[i][j] += dt / 6.0 * (k1.g[i][j] + 2.0 * k2.g[i][j] + 2.0 * k3.g[i][j] + k4.g[i][j]);
            }
        }
        (out, lag)
    }
}

fn worker_count() -> usize {
    std::thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Applies `f` to blocks of `items` on scoped threads and reduces the returned maxima.
fn par_max<T: Send>(items: &mut [T], f: impl Fn(usize, &mut [T]) -> [f64; 2] + Sync) -> [f64; 2] {
    let block = items.len().div_ceil(worker_count()).max(1);
    let f = &f;
    std::thread::scope(|s| {
        let handles: Vec<_> =
            items.chunks_mut(block).enumerate().map(|(c, chunk)| s.spawn(move || f(c * block, chunk))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("flow worker panicked"))
            .fold([0.0f64, 0.0f64], |m, r| [m[0].max(r[0]), m[1].max(r[1])])
    })
}

/// RK4 integration of `dX/dt = v(t, X)` and `d(∇X)/dt = (∇v∘X)·∇X`, one velocity window at a time.
///
/// Positions are unwrapped: a label that crosses the torus boundary keeps moving in the plane.
#[derive(Clone, Debug)]
pub struct FlowIntegrator {
    labels: Vec<[f64; 2]>,
    particles: Vec<Particle>,
    gradient: bool,
    t: f64,
    /// Every `stride`-th label is re-integrated with two half steps.
    stride: usize,
    accuracy_tol: f64,
    max_step_error: f64,
    /// Trapezoid accumulation of `max_y ‖∇_y u‖`, with `u = v∘X`.
    grad_u_integral: f64,
    last_grad_u: Option<f64>,
}

impl FlowIntegrator {
    pub fn new(labels: Vec<[f64; 2]>, t0: f64, gradient: bool) -> Self {
        let particles = labels.iter().map(|&x| Particle { x, g: IDENTITY }).collect();
        FlowIntegrator {
            labels,
            particles,
            gradient,
            t: t0,
            stride: 64,
            accuracy_tol: 1e-6,
            max_step_error: 0.0,
            grad_u_integral: 0.0,
            last_grad_u: None,
        }
    }

    /// Labels at every node of `grid`.
    pub fn on_grid(grid: Grid, t0: f64, gradient: bool) -> Result<Self> {
        if grid.d() != 2 {
            return Err(Error::Domain("flow maps are planar".into()));
        }
        let labels = (0..grid.len())
            .map(|i| {
                let x: [f64; 3] = grid.node(i);
                [x[0], x[1]]
            })
            .collect();
        Ok(Self::new(labels, t0, gradient))
    }

    pub fn with_accuracy_tol(mut self, tol: f64) -> Self {
        self.accuracy_tol = tol;
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn labels(&self) -> &[[f64; 2]] {
        &self.labels
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.particles.iter().map(|p| p.x).collect()
    }

    /// `X(t, y) − y` for every label.
    pub fn displacements(&self) -> Vec<[f64; 2]> {
        self.particles.iter().zip(&self.labels).map(|(p, y)| [p.x[0] - y[0], p.x[1] - y[1]]).collect()
    }

    pub fn gradients(&self) -> Option<Vec<Mat2>> {
        self.gradient.then(|| self.particles.iter().map(|p| p.g).collect())
    }

    /// Largest step-halving discrepancy in position seen so far.
    pub fn max_step_error(&self) -> f64 {
        self.max_step_error
    }

    /// `∫₀ᵗ max_y ‖∇_y u‖ dτ`
    pub fn grad_u_integral(&self) -> f64 {
        self.grad_u_integral
    }

    /// Advances every label across the window `[a.t, b.t]`, which must start at the current time.
    pub fn advance(&mut self, a: &VelocitySlice, b: &VelocitySlice) -> Result<()> {
        let dt = b.t - a.t;
        if !(dt > 0.0) || (a.t - self.t).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Domain(format!(
                "window [{}, {}] does not continue the flow at t = {}",
                a.t, b.t, self.t
            )));
        }
        if self.gradient && (a.grad.is_none() || b.grad.is_none()) {
            return Err(Error::Domain("gradient flow needs slices with gradients".into()));
        }
        let window = Window { a, b, gradient: self.gradient };
        let stride = self.stride;
        let [step_err, grad_u] = par_max(&mut self.particles, |offset, chunk| {
            let mut local_err = 0.0f64;
            let mut lag = 0.0f64;
            for (k, p) in chunk.iter_mut().enumerate() {
                let (full, l) = window.rk4(p, 0.0, 1.0, dt);
                lag = lag.max(l);
                if (offset + k) % stride == 0 {
                    let (half, _) = window.rk4(p, 0.0, 0.5, 0.5 * dt);
                    let (two, _) = window.rk4(&half, 0.5, 0.5, 0.5 * dt);
                    local_err = local_err.max((full.x[0] - two.x[0]).hypot(full.x[1] - two.x[1]));
                }
                *p = full;
            }
            [local_err, lag]
        });
        if step_err > self.accuracy_tol {
            warn!(
                "flow step at t = {:.4}: step-halving discrepancy {step_err:.2e} exceeds {:.1e}",
                a.t, self.accuracy_tol
            );
        }
        self.max_step_error = self.max_step_error.max(step_err);
        if self.gradient {
            // The value at the window start is exact; the end value is picked up on the next window.
            let prev = self.last_grad_u.unwrap_or(grad_u);
            self.grad_u_integral += 0.5 * dt * (prev + grad_u);
            self.last_grad_u = Some(grad_u);
        }
        self.t = b.t;
        Ok(())
    }

    /// Label-grid snapshot of the map; labels must have come from [`FlowIntegrator::on_grid`].
    pub fn flow_map(&self, grid: Grid) -> Result<FlowMap> {
        if grid.len() != self.labels.len() {
            return Err(Error::GridMismatch(format!("{} labels for {} nodes", self.labels.len(), grid.len())));
        }
        let d = self.displacements();
        let displacement = VectorField::new(vec![
            ScalarField::from_vec(grid, d.iter().map(|p| p[0]).collect()),
            ScalarField::from_vec(grid, d.iter().map(|p| p[1]).collect()),
        ])?;
        let grad_x = self.gradients().map(|g| MatrixField::new(grid, g)).transpose()?;
        Ok(FlowMap { t: self.t, displacement, grad_x, grad_u_integral: self.grad_u_integral })
    }
}

/// The flow map at one instant, sampled on the label grid.
#[derive(Clone, Debug)]
pub struct FlowMap {
    pub t: f64,
    /// `X(t, y) − y`, periodic in `y`.
    pub displacement: VectorField,
    /// `∇_y X` integrated along characteristics.
    pub grad_x: Option<MatrixField>,
    /// `∫₀ᵗ max_y ‖∇_y u‖ dτ`, the smallness quantity of the Neumann series.
    pub grad_u_integral: f64,
}

impl FlowMap {
    pub fn grid(&self) -> Grid {
        self.displacement.grid()
    }

    /// `Id + ∇_y(X − y)` by spectral differentiation of the displacement.
    pub fn spectral_grad_x(&self) -> MatrixField {
        let j = jacobian(&self.displacement);
        let n = self.grid().len();
        let values = (0..n)
            .map(|i| [0, 1].map(|a| [0, 1].map(|b| j[a].component(b).values()[i] + if a == b { 1.0 } else { 0.0 })))
            .collect();
        MatrixField::new(self.grid(), values).expect("same grid")
    }

    /// `max_y |det ∇X − 1|`
    pub fn det_deviation(&self) -> Option<f64> {
        self.grad_x.as_ref().map(|g| g.det().values().iter().map(|d| (d - 1.0).abs()).fold(0.0, f64::max))
    }

    /// `f(t, X(t, y))` on the label grid.
    pub fn pullback(&self, f: &ScalarField) -> ScalarField {
        let grid = self.grid();
        let p = Periodic2::new(f);
        let (dx, dy) = (self.displacement.component(0).values(), self.displacement.component(1).values());
        let values = (0..grid.len())
            .map(|i| {
                let y: [f64; 3] = grid.node(i);
                p.cubic_at([y[0] + dx[i], y[1] + dy[i]])
            })
            .collect();
        ScalarField::from_vec(grid, values)
    }
}

/// Runs a stored sequence of slices through a fresh integrator.
pub fn integrate_flow(slices: &[VelocitySlice], labels: Vec<[f64; 2]>, gradient: bool) -> Result<FlowIntegrator> {
    let first = slices.first().ok_or_else(|| Error::Domain("no velocity slices".into()))?;
    let mut flow = FlowIntegrator::new(labels, first.t, gradient);
    for w in slices.windows(2) {
        flow.advance(&w[0], &w[1])?;
    }
    Ok(flow)
}
