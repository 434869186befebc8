use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{Grid, Spectrum};
use crate::solver::FluidState;
use crate::{ScalarField, VectorField};

/// A disk on the torus carrying the initial velocity
/// `v₀ = (amplitude·sin 2πy + drift₀, drift₁)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Patch {
    pub radius: f64,
    pub center: [f64; 2],
    pub amplitude: f64,
    pub drift: [f64; 2],
}

impl Default for Patch {
    fn default() -> Self {
        Patch { radius: 0.25, center: [0.5, 0.5], amplitude: 0.2, drift: [0.0, 0.0] }
    }
}

impl Patch {
    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(Error::Domain(format!("patch radius {} outside (0, 1/2)", self.radius)));
        }
        if self.center.iter().chain(&self.drift).chain([&self.amplitude]).any(|c| !c.is_finite()) {
            return Err(Error::Domain("patch parameters must be finite".into()));
        }
        Ok(())
    }

    /// `1_D` sampled at the nodes, with periodic distance to the center.
    pub fn indicator(&self, grid: Grid) -> ScalarField {
        let r2 = self.radius * self.radius;
        let [cx, cy] = self.center;
        ScalarField::from_fn(grid, |x: [f64; 3]| {
            let dx = wrap(x[0] - cx);
            let dy = wrap(x[1] - cy);
            if dx * dx + dy * dy < r2 {
                1.0
            } else {
                0.0
            }
        })
    }

    pub fn velocity(&self, grid: Grid) -> VectorField {
        let (a, [d0, d1]) = (self.amplitude, self.drift);
        VectorField::from_fn(grid, |x: [f64; 3]| [a * (2.0 * PI * x[1]).sin() + d0, d1, 0.0])
    }

    /// Marker points evenly spaced in angle on the patch boundary.
    pub fn boundary_markers(&self, count: usize) -> Vec<[f64; 2]> {
        (0..count)
            .map(|m| {
                let th = 2.0 * PI * m as f64 / count as f64;
                [self.center[0] + self.radius * th.cos(), self.center[1] + self.radius * th.sin()]
            })
            .collect()
    }
}

/// Signed periodic offset in `[-1/2, 1/2)`.
fn wrap(d: f64) -> f64 {
    d - (d + 0.5).floor()
}

/// Initial data of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    /// `ρ ≡ 1`, `v₀ = amplitude·(−cos 2πx sin 2πy, sin 2πx cos 2πy)`.
    TaylorGreen {
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// `ρ₀ = 1_D`: a drop of fluid in vacuum.
    Drop {
        #[serde(flatten)]
        patch: Patch,
    },
    /// `ρ₀ = 1 − 1_D`: a vacuum bubble in fluid.
    Bubble {
        #[serde(flatten)]
        patch: Patch,
    },
    /// `ρ₀ = η₁1_D + η₂1_{D^c}`.
    TwoPhase {
        eta1: f64,
        eta2: f64,
        #[serde(flatten)]
        patch: Patch,
    },
    /// Smooth random density clipped to `[0, 1]` and a random solenoidal velocity.
    Random {
        seed: u64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
    /// Drop density at rest.
    Rest {
        #[serde(flatten)]
        patch: Patch,
    },
}

fn unit() -> f64 {
    1.0
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::Drop { patch: Patch::default() }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::TaylorGreen { amplitude } | Scenario::Random { amplitude, .. } if !amplitude.is_finite() => {
                Err(Error::Domain("amplitude must be finite".into()))
            }
            Scenario::TwoPhase { eta1, eta2, patch } => {
                if !(*eta1 >= 0.0 && *eta2 >= 0.0) || eta1.max(*eta2) <= 0.0 {
                    return Err(Error::Domain(format!(
                        "two-phase densities eta1 = {eta1}, eta2 = {eta2} must be nonnegative and not both zero"
                    )));
                }
                patch.validate()
            }
            Scenario::Drop { patch } | Scenario::Bubble { patch } | Scenario::Rest { patch } => patch.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::TaylorGreen { .. } => "taylor_green",
            Scenario::Drop { .. } => "drop",
            Scenario::Bubble { .. } => "bubble",
            Scenario::TwoPhase { .. } => "two_phase",
            Scenario::Random { .. } => "random",
            Scenario::Rest { .. } => "rest",
        }
    }

    /// The patch whose boundary is worth tracking, if any.
    pub fn patch(&self) -> Option<&Patch> {
        match self {
            Scenario::Drop { patch } | Scenario::Bubble { patch } | Scenario::TwoPhase { patch, .. } => Some(patch),
            _ => None,
        }
    }

    /// Upper density bound of the initial data.
    pub fn density_bound(&self) -> f64 {
        match self {
            Scenario::TwoPhase { eta1, eta2, .. } => eta1.max(*eta2),
            _ => 1.0,
        }
    }

    pub fn initial_state(&self, n: usize) -> Result<FluidState> {
        self.validate()?;
        let grid = Grid::new(n, 2)?;
        let (rho, v) = match self {
            Scenario::TaylorGreen { amplitude } => (ScalarField::constant(grid, 1.0), taylor_green(grid, *amplitude)),
            Scenario::Drop { patch } => (patch.indicator(grid), patch.velocity(grid)),
            Scenario::Bubble { patch } => (patch.indicator(grid).map(|c| 1.0 - c), patch.velocity(grid)),
            Scenario::TwoPhase { eta1, eta2, patch } => {
                (patch.indicator(grid).map(|c| eta1 * c + eta2 * (1.0 - c)), patch.velocity(grid))
            }
            Scenario::Random { seed, amplitude } => random_data(grid, *seed, *amplitude),
            Scenario::Rest { patch } => (patch.indicator(grid), VectorField::zeros(grid)),
        };
        FluidState::initial(rho, v)
    }
}

pub fn taylor_green(grid: Grid, amplitude: f64) -> VectorField {
    VectorField::from_fn(grid, |x: [f64; 3]| {
        let (sx, cx) = (2.0 * PI * x[0]).sin_cos();
        let (sy, cy) = (2.0 * PI * x[1]).sin_cos();
        [-amplitude * cx * sy, amplitude * sx * cy, 0.0]
    })
}

fn random_data(grid: Grid, seed: u64, amplitude: f64) -> (ScalarField, VectorField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let smooth = |rng: &mut ChaCha8Rng| {
        let modes: Vec<([f64; 2], f64, f64)> = (0..12)
            .map(|_| {
                let k = [rng.gen_range(-3i32..=3) as f64, rng.gen_range(1i32..=3) as f64];
                (k, rng.gen_range(0.0..2.0 * PI), rng.gen_range(-1.0..1.0))
            })
            .collect();
        ScalarField::from_fn(grid, move |x: [f64; 3]| {
            modes.iter().map(|(k, ph, a)| a * (2.0 * PI * (k[0] * x[0] + k[1] * x[1]) + ph).cos()).sum::<f64>()
        })
    };
    let bump = smooth(&mut rng);
    let scale = bump.lp_norm(f64::INFINITY).expect("p = ∞").max(1e-12);
    let rho = bump.map(|b| (0.5 + 0.8 * b / scale).clamp(0.0, 1.0));
    let psi = smooth(&mut rng);
    let s = Spectrum::forward(&psi);
    let v = crate::fields::spectral::vector_from_spectra(&[s.derivative(1), s.derivative(0)]);
    let mut v = VectorField::new(vec![-v.component(0), v.component(1).clone()]).expect("2D velocity");
    let vmax = v.lp_norm(f64::INFINITY).expect("p = ∞").max(1e-12);
    v.scale(amplitude / vmax);
    (rho, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::divergence;

    #[test]
    fn drop_mass_approximates_the_disk_area() {
        let s = Scenario::default().initial_state(256).unwrap();
        assert!((s.rho.integral() - PI / 16.0).abs() < 2e-3);
        assert_eq!((s.rho.min(), s.rho.max()), (0.0, 1.0));
    }

    #[test]
    fn every_scenario_starts_solenoidal() {
        let patch = Patch::default();
        for sc in [
            Scenario::TaylorGreen { amplitude: 1.0 },
            Scenario::Drop { patch: patch.clone() },
            Scenario::Bubble { patch: patch.clone() },
            Scenario::TwoPhase { eta1: 2.0, eta2: 0.5, patch: patch.clone() },
            Scenario::Random { seed: 4, amplitude: 1.0 },
            Scenario::Rest { patch },
        ] {
            let s = sc.initial_state(32).unwrap();
            assert!(divergence(&s.v).l2_norm() < 1e-12, "{}", sc.name());
            assert!(s.rho.min() >= 0.0 && s.rho.max() <= sc.density_bound());
        }
    }

    #[test]
    fn negative_phase_density_is_rejected() {
        let sc = Scenario::TwoPhase { eta1: -1.0, eta2: 1.0, patch: Patch::default() };
        assert!(sc.initial_state(16).is_err());
    }

    #[test]
    fn random_scenario_is_reproducible() {
        let a = Scenario::Random { seed: 9, amplitude: 1.0 }.initial_state(16).unwrap();
        let b = Scenario::Random { seed: 9, amplitude: 1.0 }.initial_state(16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patch_fields_parse_flat_and_reject_typos() {
        let sc: Scenario = serde_json::from_str(r#"{"kind": "drop", "radius": 0.2}"#).unwrap();
        assert_eq!(sc.patch().unwrap().radius, 0.2);
        assert!(serde_json::from_str::<Scenario>(r#"{"kind": "drop", "raduis": 0.2}"#).is_err());
    }

    #[test]
    fn wrap_is_centered() {
        assert_eq!(wrap(0.75), -0.25);
        assert!((wrap(-0.6) - 0.4).abs() < 1e-15);
    }
}
