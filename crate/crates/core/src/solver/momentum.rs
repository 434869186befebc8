use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::solver::advect::advect_velocity;
use crate::solver::ops::SpectralOps;
use crate::solver::{FluidState, InnerMethod, SolverConfig, VelocityAdvection};
use crate::{ScalarField, VectorField};

/// Solution of one implicit Stokes step.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumSolution {
    pub v: VectorField,
    pub p: ScalarField,
    pub iterations: usize,
    /// Final relative residual `‖b − Lv‖₂/‖b‖₂`.
    pub residual: f64,
}

/// Solves `ρ̃(v − ṽ)/dt − μΔv + ∇P = 0`, `div v = 0` with `ρ̃ = max(ρ, ε)`.
///
/// On the divergence-free subspace the system is `Lv = P(ρ̃ṽ)/dt` with
/// `Lv = P(ρ̃v)/dt − μΔv`, which is symmetric positive definite whenever
/// `∫ρ̃ > 0`. Both inner methods use the spectral inverse of
/// `ρ̄/dt − μΔ`, `ρ̄ = mean(ρ̃)`, as preconditioner.
pub(crate) struct MomentumSolver {
    ops: SpectralOps,
}

type Pair = (Vec<Complex64>, Vec<Complex64>);

impl MomentumSolver {
    pub fn new(grid: crate::fields::Grid) -> Self {
        MomentumSolver { ops: SpectralOps::new(grid) }
    }

    /// Explicit velocity `ṽ` from the inertial term.
    pub fn explicit_velocity(&mut self, v: &VectorField, dt: f64, mode: VelocityAdvection) -> VectorField {
        match mode {
            VelocityAdvection::SemiLagrangian => advect_velocity(v, dt),
            VelocityAdvection::Spectral => {
                let ops = &mut self.ops;
                let len = ops.grid().len();
                let (mut a, mut b) = (ops.zeros(), ops.zeros());
                ops.forward2(v.component(0).values(), v.component(1).values(), &mut a, &mut b);
                for (i, keep) in ops.keep.iter().enumerate() {
                    if !keep {
                        a[i] = Complex64::default();
                        b[i] = Complex64::default();
                    }
                }
                let deriv = |c: &[Complex64], axis: usize, ops: &SpectralOps| -> Vec<Complex64> {
                    c.iter().zip(&ops.kappa).map(|(z, k)| z * Complex64::new(0.0, k[axis])).collect()
                };
                let (ax, ay, bx, by) = (deriv(&a, 0, ops), deriv(&a, 1, ops), deriv(&b, 0, ops), deriv(&b, 1, ops));
                let mut u = (vec![0.0; len], vec![0.0; len]);
                let mut gu = (vec![0.0; len], vec![0.0; len]);
                let mut gw = (vec![0.0; len], vec![0.0; len]);
                ops.inverse2(&a, &b, &mut u.0, &mut u.1);
                ops.inverse2(&ax, &ay, &mut gu.0, &mut gu.1);
                ops.inverse2(&bx, &by, &mut gw.0, &mut gw.1);
                let nx: Vec<f64> = (0..len).map(|i| u.0[i] * gu.0[i] + u.1[i] * gu.1[i]).collect();
                let ny: Vec<f64> = (0..len).map(|i| u.0[i] * gw.0[i] + u.1[i] * gw.1[i]).collect();
                ops.forward2(&nx, &ny, &mut a, &mut b);
                for (i, keep) in ops.keep.iter().enumerate() {
                    if !keep {
                        a[i] = Complex64::default();
                        b[i] = Complex64::default();
                    }
                }
                let mut n = (vec![0.0; len], vec![0.0; len]);
                ops.inverse2(&a, &b, &mut n.0, &mut n.1);
                let grid = v.grid();
                let step = |c: &ScalarField, nl: &[f64]| {
                    let vals = c.values().iter().zip(nl).map(|(x, y)| x - dt * y).collect();
                    ScalarField::new(grid, vals).expect("finite explicit velocity")
                };
                VectorField::new(vec![step(v.component(0), &n.0), step(v.component(1), &n.1)])
                    .expect("two components on one grid")
            }
        }
    }

    /// Solves with `guess` (divergence-free) as the starting iterate when given.
    pub fn solve(
        &mut self,
        rho: &ScalarField,
        v_tilde: &VectorField,
        guess: Option<&VectorField>,
        cfg: &SolverConfig,
    ) -> Result<MomentumSolution> {
        let grid = rho.grid();
        let len = grid.len();
        let dt = cfg.dt;
        let weight: Vec<f64> = rho.values().iter().map(|&r| r.max(cfg.eps_floor)).collect();
        let rho_bar = weight.iter().sum::<f64>() / len as f64;
        if rho_bar <= 0.0 {
            return Err(Error::Degenerate("momentum solve with zero total mass".into()));
        }

        let mut b = self.weighted_projection(&weight, v_tilde.component(0).values(), v_tilde.component(1).values());
        b.0.iter_mut().chain(b.1.iter_mut()).for_each(|c| *c /= dt);
        let b_norm = SpectralOps::dot((&b.0, &b.1), (&b.0, &b.1)).sqrt();

        let (x, iterations, residual) = if b_norm == 0.0 {
            ((self.ops.zeros(), self.ops.zeros()), 0, 0.0)
        } else {
            match cfg.inner_method {
                InnerMethod::Cg => self.pcg(&weight, rho_bar, &b, b_norm, guess, cfg)?,
                InnerMethod::Richardson => self.richardson(&weight, rho_bar, &b, b_norm, guess, cfg)?,
            }
        };

        let mut vx = vec![0.0; len];
        let mut vy = vec![0.0; len];
        self.ops.inverse2(&x.0, &x.1, &mut vx, &mut vy);

        // ∇P is the gradient part of −ρ̃(v − ṽ)/dt.
        let gx: Vec<f64> = (0..len).map(|i| -weight[i] * (vx[i] - v_tilde.component(0).values()[i]) / dt).collect();
        let gy: Vec<f64> = (0..len).map(|i| -weight[i] * (vy[i] - v_tilde.component(1).values()[i]) / dt).collect();
        let (mut ga, mut gb) = (self.ops.zeros(), self.ops.zeros());
        self.ops.forward2(&gx, &gy, &mut ga, &mut gb);
        let p_hat = self.ops.potential(&ga, &gb);
        let zero = self.ops.zeros();
        let mut p = vec![0.0; len];
        let mut scratch = vec![0.0; len];
        self.ops.inverse2(&p_hat, &zero, &mut p, &mut scratch);

        let v = VectorField::new(vec![ScalarField::new(grid, vx)?, ScalarField::new(grid, vy)?])?;
        Ok(MomentumSolution { v, p: ScalarField::new(grid, p)?, iterations, residual })
    }

    /// `P̂(w·u)` for a physical pair `u`.
    fn weighted_projection(&mut self, w: &[f64], ux: &[f64], uy: &[f64]) -> Pair {
        let wx: Vec<f64> = w.iter().zip(ux).map(|(a, b)| a * b).collect();
        let wy: Vec<f64> = w.iter().zip(uy).map(|(a, b)| a * b).collect();
        let (mut a, mut b) = (self.ops.zeros(), self.ops.zeros());
        self.ops.forward2(&wx, &wy, &mut a, &mut b);
        self.ops.project(&mut a, &mut b);
        (a, b)
    }

    /// `P(w·x)/dt` for spectral `x`.
    fn apply_mass(&mut self, w: &[f64], x: &Pair, dt: f64, phys: &mut (Vec<f64>, Vec<f64>)) -> Pair {
        self.ops.inverse2(&x.0, &x.1, &mut phys.0, &mut phys.1);
        let (px, py) = (std::mem::take(&mut phys.0), std::mem::take(&mut phys.1));
        let mut out = self.weighted_projection(w, &px, &py);
        phys.0 = px;
        phys.1 = py;
        out.0.iter_mut().chain(out.1.iter_mut()).for_each(|c| *c /= dt);
        out
    }

    fn precondition(&self, r: &Pair, rho_bar: f64, cfg: &SolverConfig) -> Pair {
        let scale = |c: &[Complex64]| -> Vec<Complex64> {
            c.iter().zip(&self.ops.lap).map(|(z, l)| z / (rho_bar / cfg.dt + cfg.mu * l)).collect()
        };
        (scale(&r.0), scale(&r.1))
    }

    /// Starting iterate: the better of `guess` and the preconditioned right-hand side.
    fn start(
        &mut self,
        w: &[f64],
        rho_bar: f64,
        b: &Pair,
        guess: Option<&VectorField>,
        cfg: &SolverConfig,
        phys: &mut (Vec<f64>, Vec<f64>),
    ) -> (Pair, Pair) {
        let x = self.precondition(b, rho_bar, cfg);
        let lx = self.apply_operator(w, &x, cfg, phys);
        let r: Pair = (sub(&b.0, &lx.0), sub(&b.1, &lx.1));
        let Some(g) = guess else { return (x, r) };
        let (mut ga, mut gb) = (self.ops.zeros(), self.ops.zeros());
        self.ops.forward2(g.component(0).values(), g.component(1).values(), &mut ga, &mut gb);
        let gx = (ga, gb);
        let lg = self.apply_operator(w, &gx, cfg, phys);
        let rg: Pair = (sub(&b.0, &lg.0), sub(&b.1, &lg.1));
        if norm(&rg) < norm(&r) {
            (gx, rg)
        } else {
            (x, r)
        }
    }

    fn pcg(
        &mut self,
        w: &[f64],
        rho_bar: f64,
        b: &Pair,
        b_norm: f64,
        guess: Option<&VectorField>,
        cfg: &SolverConfig,
    ) -> Result<(Pair, usize, f64)> {
        let len = w.len();
        let mut phys = (vec![0.0; len], vec![0.0; len]);
        let (mut x, mut r) = self.start(w, rho_bar, b, guess, cfg, &mut phys);
        let mut res = norm(&r) / b_norm;
        if res <= cfg.inner_tol {
            return Ok((x, 0, res));
        }
        let mut z = self.precondition(&r, rho_bar, cfg);
        let mut p = z.clone();
        let mut rz = SpectralOps::dot((&r.0, &r.1), (&z.0, &z.1));
        for it in 1..=cfg.inner_maxit {
            let ap = self.apply_operator(w, &p, cfg, &mut phys);
            let pap = SpectralOps::dot((&p.0, &p.1), (&ap.0, &ap.1));
            if !(pap > 0.0) {
                return Err(Error::NonConvergence { iterations: it, residual: res });
            }
            let alpha = rz / pap;
            axpy(&mut x, alpha, &p);
            axpy(&mut r, -alpha, &ap);
            res = norm(&r) / b_norm;
            if !res.is_finite() {
                return Err(Error::NonConvergence { iterations: it, residual: res });
            }
            if res <= cfg.inner_tol {
                return Ok((x, it, res));
            }
            z = self.precondition(&r, rho_bar, cfg);
            let rz_new = SpectralOps::dot((&r.0, &r.1), (&z.0, &z.1));
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.0.iter_mut().zip(&z.0).chain(p.1.iter_mut().zip(&z.1)) {
                *pi = zi + *pi * beta;
            }
        }
        Err(Error::NonConvergence { iterations: cfg.inner_maxit, residual: res })
    }

    fn richardson(
        &mut self,
        w: &[f64],
        rho_bar: f64,
        b: &Pair,
        b_norm: f64,
        guess: Option<&VectorField>,
        cfg: &SolverConfig,
    ) -> Result<(Pair, usize, f64)> {
        let len = w.len();
        let mut phys = (vec![0.0; len], vec![0.0; len]);
        let (mut x, mut r) = self.start(w, rho_bar, b, guess, cfg, &mut phys);
        let mut res = f64::INFINITY;
        for it in 1..=cfg.inner_maxit {
            if it > 1 {
                let lx = self.apply_operator(w, &x, cfg, &mut phys);
                r = (sub(&b.0, &lx.0), sub(&b.1, &lx.1));
            }
            res = norm(&r) / b_norm;
            if !res.is_finite() || res > 1e8 {
                return Err(Error::NonConvergence { iterations: it, residual: res });
            }
            if res <= cfg.inner_tol {
                return Ok((x, it - 1, res));
            }
            let dx = self.precondition(&r, rho_bar, cfg);
            axpy(&mut x, 1.0, &dx);
        }
        Err(Error::NonConvergence { iterations: cfg.inner_maxit, residual: res })
    }

    fn apply_operator(&mut self, w: &[f64], x: &Pair, cfg: &SolverConfig, phys: &mut (Vec<f64>, Vec<f64>)) -> Pair {
        let mut out = self.apply_mass(w, x, cfg.dt, phys);
        for (i, l) in self.ops.lap.iter().enumerate() {
            out.0[i] += x.0[i] * (cfg.mu * l);
            out.1[i] += x.1[i] * (cfg.mu * l);
        }
        out
    }
}

fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(p: &Pair) -> f64 {
    SpectralOps::dot((&p.0, &p.1), (&p.0, &p.1)).sqrt()
}

fn axpy(y: &mut Pair, alpha: f64, x: &Pair) {
    for (yi, xi) in y.0.iter_mut().zip(&x.0).chain(y.1.iter_mut().zip(&x.1)) {
        *yi += xi * alpha;
    }
}

/// Explicit velocity `ṽ` entering the implicit step.
pub fn explicit_velocity(v: &VectorField, dt: f64, mode: VelocityAdvection) -> VectorField {
    MomentumSolver::new(v.grid()).explicit_velocity(v, dt, mode)
}

/// One implicit momentum step from `state.v` with density `state.rho`.
pub fn momentum_step(state: &FluidState, cfg: &SolverConfig) -> Result<(VectorField, ScalarField)> {
    let mut solver = MomentumSolver::new(state.grid());
    let v_tilde = solver.explicit_velocity(&state.v, cfg.dt, cfg.velocity_advection);
    let sol = solver.solve(&state.rho, &v_tilde, None, cfg)?;
    Ok((sol.v, sol.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, Grid};
    use std::f64::consts::PI;

    fn cfg(n: usize) -> SolverConfig {
        SolverConfig { n, dt: 1e-3, mu: 0.01, eps_floor: 1e-3, ..Default::default() }
    }

    fn taylor_green(grid: Grid) -> VectorField {
        VectorField::from_fn(grid, |x: [f64; 3]| {
            let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
            let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
            [-cx * sy, sx * cy, 0.0]
        })
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let grid = Grid::square(16);
        let rho = ScalarField::from_fn(grid, |x: [f64; 3]| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let state = FluidState::initial(rho, VectorField::zeros(grid)).unwrap();
        let (v, p) = momentum_step(&state, &cfg(16)).unwrap();
        assert_eq!(v.l2_norm(), 0.0);
        assert_eq!(p.l2_norm(), 0.0);
    }

    #[test]
    fn uniform_translation_is_steady() {
        let grid = Grid::square(16);
        let u = VectorField::constant(grid, [0.3, -1.2, 0.0]);
        let state = FluidState::initial(ScalarField::constant(grid, 1.0), u.clone()).unwrap();
        let (v, p) = momentum_step(&state, &cfg(16)).unwrap();
        assert!((&v - &u).l2_norm() < 1e-13);
        assert!(p.l2_norm() < 1e-12);
    }

    #[test]
    fn taylor_green_decays_by_the_implicit_factor() {
        let grid = Grid::square(32);
        let c = cfg(32);
        let v0 = taylor_green(grid);
        let state = FluidState::initial(ScalarField::constant(grid, 1.0), v0.clone()).unwrap();
        let (v, p) = momentum_step(&state, &c).unwrap();
        let a = 8.0 * PI * PI * c.mu * c.dt;
        let implicit = &v0 * (1.0 / (1.0 + a));
        assert!((&v - &implicit).l2_norm() < 1e-12);
        let exact = &v0 * (-a).exp();
        assert!((&v - &exact).l2_norm() < a * a * v0.l2_norm());
        // P = −(cos 4πx + cos 4πy)/4 up to the decay of this step
        let p_exact =
            ScalarField::from_fn(grid, |x: [f64; 3]| -0.25 * ((4.0 * PI * x[0]).cos() + (4.0 * PI * x[1]).cos()));
        assert!((&p - &p_exact).l2_norm() < 1e-2);
    }

    #[test]
    fn variable_density_solution_is_solenoidal_and_balances_momentum() {
        let grid = Grid::square(32);
        let rho =
            ScalarField::from_fn(
                grid,
                |x: [f64; 3]| {
                    if (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2) < 0.0625 {
                        1.0
                    } else {
                        0.0
                    }
                },
            );
        let v0 = VectorField::from_fn(grid, |x: [f64; 3]| [(2.0 * PI * x[1]).sin() + 0.2, 0.0, 0.0]);
        let c = SolverConfig { n: 32, ..cfg(32) };
        let mut solver = MomentumSolver::new(grid);
        let sol = solver.solve(&rho, &v0, None, &c).unwrap();
        assert!(sol.iterations > 1);
        assert!(divergence(&sol.v).l2_norm() < 1e-10);
        let w = rho.map(|r| r.max(c.eps_floor));
        let before = v0.weighted(&w).integral();
        let after = sol.v.weighted(&w).integral();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_and_richardson_agree_for_mild_contrast() {
        let grid = Grid::square(16);
        let rho = ScalarField::from_fn(grid, |x: [f64; 3]| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
        let v0 = taylor_green(grid);
        let mut solver = MomentumSolver::new(grid);
        let base = SolverConfig { n: 16, rho_star: 2.0, ..cfg(16) };
        let a = solver.solve(&rho, &v0, None, &base).unwrap();
        let r = SolverConfig { inner_method: InnerMethod::Richardson, ..base };
        let b = solver.solve(&rho, &v0, None, &r).unwrap();
        assert!((&a.v - &b.v).l2_norm() < 1e-8);
    }

    #[test]
    fn iteration_cap_reports_nonconvergence() {
        let grid = Grid::square(16);
        let rho = ScalarField::from_fn(grid, |x: [f64; 3]| if x[0] < 0.25 { 1.0 } else { 0.0 });
        let v0 = taylor_green(grid);
        let c = SolverConfig { n: 16, eps_floor: 0.0, inner_maxit: 2, ..cfg(16) };
        let mut solver = MomentumSolver::new(grid);
        assert!(matches!(solver.solve(&rho, &v0, None, &c), Err(Error::NonConvergence { .. })));
    }
}
