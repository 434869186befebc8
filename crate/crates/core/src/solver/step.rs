use crate::error::{Error, Result};
use crate::solver::advect::advect_density;
use crate::solver::momentum::MomentumSolver;
use crate::solver::{FluidState, SolverConfig};

/// Per-step solver statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub cfl: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Owns the spectral workspace of one run.
pub struct Stepper {
    cfg: SolverConfig,
    momentum: MomentumSolver,
}

impl Stepper {
    pub fn new(cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = crate::fields::Grid::square(cfg.n);
        Ok(Stepper { momentum: MomentumSolver::new(grid), cfg })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    /// Transport `ρ` by `vⁿ`, then solve the implicit Stokes step with `ρⁿ⁺¹`.
    pub fn step(&mut self, state: &FluidState) -> Result<(FluidState, StepReport)> {
        if state.grid().n() != self.cfg.n || state.grid().d() != 2 {
            return Err(Error::GridMismatch(format!(
                "state on {}^{} nodes, solver configured for {}^2",
                state.grid().n(),
                state.grid().d(),
                self.cfg.n
            )));
        }
        let dt = self.cfg.dt;
        let advected = advect_density(&state.rho, &state.v, dt, self.cfg.cfl_limit)?;
        let v_tilde = self.momentum.explicit_velocity(&state.v, dt, self.cfg.velocity_advection);
        // Linear extrapolation vⁿ + dt·v_tⁿ is within O(dt²) of the solution.
        let guess = state.vt.as_ref().map(|vt| {
            let mut g = state.v.clone();
            g.add_scaled(dt, vt);
            g
        });
        let sol = self.momentum.solve(&advected.field, &v_tilde, guess.as_ref(), &self.cfg)?;

        let mut vt = &sol.v - &state.v;
        vt.scale(1.0 / dt);
        let rho_star = self.cfg.rho_star;
        let rho = advected.field.map(|r| r.clamp(0.0, rho_star));
        let mut p = sol.p;
        p.subtract_mean();
        let next = FluidState { t: state.t + dt, rho, v: sol.v, p, vt: Some(vt) };
        let report = StepReport { cfl: advected.cfl, iterations: sol.iterations, residual: sol.residual };
        Ok((next, report))
    }

    /// Steps until `t_end`, handing every new state to `observe`.
    pub fn run(
        &mut self,
        mut state: FluidState,
        mut observe: impl FnMut(&FluidState, &StepReport) -> Result<()>,
    ) -> Result<FluidState> {
        let remaining = ((self.cfg.t_end - state.t) / self.cfg.dt).round().max(0.0) as usize;
        for _ in 0..remaining {
            let (next, report) = self.step(&state)?;
            observe(&next, &report)?;
            state = next;
        }
        Ok(state)
    }
}

/// Single step with a fresh workspace.
pub fn step(state: &FluidState, cfg: &SolverConfig) -> Result<FluidState> {
    Stepper::new(SolverConfig { n: state.grid().n(), ..cfg.clone() })?.step(state).map(|(s, _)| s)
}
