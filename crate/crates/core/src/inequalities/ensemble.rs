use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fields::{Grid, Spectrum};
use crate::ScalarField;

/// How the weight `a` (a density in `[0, ρ*]`) of each sample is drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityModel {
    Constant {
        value: f64,
    },
    /// `ρ*·1_D` for a disk of random center and area drawn from `[area_min, area_max]`.
    Patch {
        area_min: f64,
        area_max: f64,
    },
    /// Smooth random field clipped to `[0, ρ*]`.
    ClippedRandom,
    /// `ρ*` on a random fraction of the nodes, zero elsewhere.
    Sparse {
        fraction: f64,
    },
}

impl Default for DensityModel {
    fn default() -> Self {
        DensityModel::Patch { area_min: 0.05, area_max: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldEnsemble {
    pub seed: u64,
    pub count: usize,
    /// `q` in `|ẑ_k| ~ |k|^{−q}`.
    pub spectrum_decay: f64,
    pub density_model: DensityModel,
    pub rho_star: f64,
    /// Modes with `|k_a| ≥ max_mode` are absent; defaults to `n/4`, which keeps `z⁴` exactly resolved.
    pub max_mode: Option<usize>,
}

impl Default for FieldEnsemble {
    fn default() -> Self {
        FieldEnsemble {
            seed: 0,
            count: 1000,
            spectrum_decay: 2.0,
            density_model: DensityModel::default(),
            rho_star: 1.0,
            max_mode: None,
        }
    }
}

impl FieldEnsemble {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_star > 0.0 && self.spectrum_decay.is_finite()) {
            return Err(Error::Domain("rho_star must be positive and spectrum_decay finite".into()));
        }
        match self.density_model {
            DensityModel::Constant { value } if !(value > 0.0 && value <= self.rho_star) => {
                Err(Error::Domain(format!("constant density {value} outside (0, rho_star]")))
            }
            DensityModel::Patch { area_min, area_max }
                if !(area_min > 0.0 && area_min <= area_max && area_max < PI / 4.0) =>
            {
                Err(Error::Domain(format!("patch areas [{area_min}, {area_max}] must lie in (0, π/4)")))
            }
            DensityModel::Sparse { fraction } if !(fraction > 0.0 && fraction <= 1.0) => {
                Err(Error::Domain(format!("sparse fraction {fraction} outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Random field with `|ẑ_k| = u_k|k|^{−q}`, `u_k ∈ [1/2, 3/2)`, uniform phases and a uniform mean in `[−1, 1)`.
///
/// Modes are drawn in a fixed lattice order, so the same stream yields the same
/// trigonometric polynomial on every grid with `n ≥ 2·kmax`.
fn random_spectrum_field(grid: Grid, rng: &mut ChaCha8Rng, decay: f64, kmax: usize) -> ScalarField {
    let (n, d) = (grid.n() as i64, grid.d());
    let kmax = kmax as i64;
    let side = 2 * kmax - 1;
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for code in 0..side.pow(d as u32) {
        let mut k = [0i64; 3];
        let mut rest = code;
        for c in k.iter_mut().take(d) {
            *c = rest % side - (kmax - 1);
            rest /= side;
        }
        let k2 = k.iter().map(|c| c * c).sum::<i64>();
        let value = if k2 == 0 {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            let amp = rng.gen_range(0.5..1.5) * (k2 as f64).powf(-0.5 * decay);
            Complex64::from_polar(amp, rng.gen_range(0.0..2.0 * PI))
        };
        coeffs[grid.flat(k.map(|c| c.rem_euclid(n) as usize))] = value;
    }
    // The real part of a non-Hermitian synthesis keeps the modulus law of each ±k pair.
    Spectrum::from_coeffs(grid, coeffs).expect("sized to the grid").inverse()
}

/// Sample `index` of the ensemble on `grid`, deterministic in `(seed, index)`.
pub fn sample_random_field(ensemble: &FieldEnsemble, grid: Grid, index: usize) -> Result<(ScalarField, ScalarField)> {
    ensemble.validate()?;
    if index >= ensemble.count {
        return Err(Error::Domain(format!("sample {index} out of an ensemble of {}", ensemble.count)));
    }
    let mut rng = ensemble.rng(index);
    let rho_star = ensemble.rho_star;
    let kmax = ensemble.max_mode.unwrap_or(grid.n() / 4).clamp(2, grid.n() / 2);
    let a = match ensemble.density_model {
        DensityModel::Constant { value } => ScalarField::constant(grid, value),
        DensityModel::Patch { area_min, area_max } => {
            let area = rng.gen_range(area_min..=area_max);
            let r2 = area / PI;
            let c = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            ScalarField::from_fn(grid, |x: [f64; 3]| {
                let d = |a: f64, b: f64| {
                    let t = a - b;
                    t - (t + 0.5).floor()
                };
                let (dx, dy) = (d(x[0], c[0]), d(x[1], c[1]));
                if dx * dx + dy * dy < r2 {
                    rho_star
                } else {
                    0.0
                }
            })
        }
        DensityModel::ClippedRandom => {
            let g = random_spectrum_field(grid, &mut rng, 2.0, 5);
            let scale = g.lp_norm(f64::INFINITY)?.max(1e-12);
            g.map(|v| (rho_star * (0.5 + v / scale)).clamp(0.0, rho_star))
        }
        DensityModel::Sparse { fraction } => {
            let vals = (0..grid.len()).map(|_| if rng.gen_bool(fraction) { rho_star } else { 0.0 }).collect();
            ScalarField::new(grid, vals)?
        }
    };
    let z = random_spectrum_field(grid, &mut rng, ensemble.spectrum_decay, kmax);
    Ok((a, z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::hs_seminorm;

    #[test]
    fn samples_are_reproducible_and_distinct() {
        let ens = FieldEnsemble::default();
        let grid = Grid::square(32);
        let a = sample_random_field(&ens, grid, 7).unwrap();
        let b = sample_random_field(&ens, grid, 7).unwrap();
        let c = sample_random_field(&ens, grid, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn constant_model_gives_a_constant_weight() {
        let ens = FieldEnsemble { density_model: DensityModel::Constant { value: 0.3 }, ..Default::default() };
        let (a, _) = sample_random_field(&ens, Grid::square(16), 0).unwrap();
        assert!(a.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn every_model_respects_the_bounds() {
        let grid = Grid::square(32);
        for model in [
            DensityModel::Patch { area_min: 0.05, area_max: 0.5 },
            DensityModel::ClippedRandom,
            DensityModel::Sparse { fraction: 0.1 },
        ] {
            let ens = FieldEnsemble { density_model: model, rho_star: 2.0, count: 5, ..Default::default() };
            for i in 0..5 {
                let (a, z) = sample_random_field(&ens, grid, i).unwrap();
                assert!(a.min() >= 0.0 && a.max() <= 2.0);
                assert!(hs_seminorm(&z, 1.0).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn fixed_band_gives_the_same_field_on_finer_grids() {
        let ens = FieldEnsemble { max_mode: Some(4), ..Default::default() };
        let (_, coarse) = sample_random_field(&ens, Grid::square(16), 2).unwrap();
        let (_, fine) = sample_random_field(&ens, Grid::square(32), 2).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let (c, f) = (coarse.values()[i * 16 + j], fine.values()[2 * i * 32 + 2 * j]);
                assert!((c - f).abs() < 1e-12, "{c} vs {f}");
            }
        }
    }

    #[test]
    fn index_past_count_is_rejected() {
        let ens = FieldEnsemble { count: 3, ..Default::default() };
        assert!(sample_random_field(&ens, Grid::square(16), 3).is_err());
    }

    #[test]
    fn band_limit_is_respected() {
        let ens = FieldEnsemble { max_mode: Some(4), ..Default::default() };
        let (_, z) = sample_random_field(&ens, Grid::square(32), 0).unwrap();
        let s = Spectrum::forward(&z);
        for (i, c) in s.coeffs().iter().enumerate() {
            if s.grid().wave_vector(i).iter().any(|k| k.abs() >= 4) {
                assert!(c.norm() < 1e-14);
            }
        }
    }
}
