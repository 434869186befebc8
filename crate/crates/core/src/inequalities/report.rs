use serde::{Deserialize, Serialize};
use std::num::NonZeroUsize;

use super::checks::{
    desjardins_check, ladyzhenskaya_ratio, log_poincare_check, truncation_bounds, weighted_poincare_check,
};
use super::ensemble::{sample_random_field, FieldEnsemble};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::ScalarField;

/// The inequalities evaluated over an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    WeightedPoincare,
    /// `‖z̃_n‖_∞` against the lattice-sum bound.
    TruncationLinf,
    /// `‖z̃ − z̃_n‖_{Ḣ^{1/2}}` against `(2πn)^{−1/2}‖∇z‖₂`.
    TruncationTail,
    LogPoincare,
    Ladyzhenskaya,
    /// Proof form: the log-interpolation bound plus the mean term.
    Desjardins,
    /// Headline form without the mean term; fails for constants.
    DesjardinsLiteral,
}

impl Lemma {
    pub const ALL: [Lemma; 7] = [
        Lemma::WeightedPoincare,
        Lemma::TruncationLinf,
        Lemma::TruncationTail,
        Lemma::LogPoincare,
        Lemma::Ladyzhenskaya,
        Lemma::Desjardins,
        Lemma::DesjardinsLiteral,
    ];

    /// Explicit constants: every sample must satisfy `lhs ≤ rhs`.
    pub fn assertable(self) -> bool {
        matches!(self, Lemma::WeightedPoincare | Lemma::TruncationLinf | Lemma::TruncationTail)
    }

    /// Fitted constants whose stability under refinement is asserted.
    pub fn fitted(self) -> bool {
        matches!(self, Lemma::LogPoincare | Lemma::Ladyzhenskaya | Lemma::Desjardins)
    }

    pub fn name(self) -> &'static str {
        match self {
            Lemma::WeightedPoincare => "weighted_poincare",
            Lemma::TruncationLinf => "truncation_linf",
            Lemma::TruncationTail => "truncation_tail",
            Lemma::LogPoincare => "log_poincare",
            Lemma::Ladyzhenskaya => "ladyzhenskaya",
            Lemma::Desjardins => "desjardins",
            Lemma::DesjardinsLiteral => "desjardins_literal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Cutoff `n` of the Fourier truncation checks.
    pub truncation_level: usize,
    pub threads: usize,
    /// Multiplies the weighted Poincaré right side. Anything but 1 is a negative control.
    pub poincare_rhs_scale: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            truncation_level: 8,
            threads: std::thread::available_parallelism().map_or(1, NonZeroUsize::get),
            poincare_rhs_scale: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `None` when the sample is degenerate for this lemma (vanishing right side, constant field, …).
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub fine_n: usize,
    pub fine_max_ratio: Option<f64>,
    /// `|fine/coarse − 1|`
    pub relative_change: Option<f64>,
    pub tolerance: f64,
    pub stable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lemma: Lemma,
    pub n: usize,
    pub assertable: bool,
    pub samples: Vec<SampleOutcome>,
    /// Largest ratio; for fitted lemmas this is the fitted constant.
    pub max_ratio: Option<f64>,
    /// Sample indices with `lhs > rhs`; only meaningful for assertable lemmas.
    pub violations: Vec<usize>,
    pub refinement: Option<Refinement>,
}

impl InequalityReport {
    fn from_samples(lemma: Lemma, n: usize, samples: Vec<SampleOutcome>) -> Self {
        let max_ratio = samples.iter().filter_map(|s| s.ratio).reduce(f64::max);
        let violations = if lemma.assertable() {
            samples.iter().filter(|s| s.lhs > s.rhs).map(|s| s.index).collect()
        } else {
            vec![]
        };
        InequalityReport { lemma, n, assertable: lemma.assertable(), samples, max_ratio, violations, refinement: None }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.refinement.as_ref().is_none_or(|r| r.stable)
    }

    /// Compares the fitted constant with the one from a finer grid.
    pub fn attach_refinement(&mut self, fine: &InequalityReport, tolerance: f64) {
        let relative_change = match (self.max_ratio, fine.max_ratio) {
            (Some(c), Some(f)) if c > 0.0 => Some((f / c - 1.0).abs()),
            _ => None,
        };
        self.refinement = Some(Refinement {
            fine_n: fine.n,
            fine_max_ratio: fine.max_ratio,
            relative_change,
            tolerance,
            stable: relative_change.is_some_and(|r| r <= tolerance),
        });
    }
}

fn outcome(index: usize, lhs: f64, rhs: f64) -> SampleOutcome {
    SampleOutcome { index, lhs, rhs, ratio: (rhs > 0.0 && lhs.is_finite()).then(|| lhs / rhs) }
}

/// Every lemma on one `(a, z)` pair, in the order of `lemmas`.
pub fn evaluate_pair(
    index: usize,
    a: &ScalarField,
    z: &ScalarField,
    rho_star: f64,
    lemmas: &[Lemma],
    settings: &EvalSettings,
) -> Result<Vec<SampleOutcome>> {
    let skipped = SampleOutcome { index, lhs: f64::NAN, rhs: f64::NAN, ratio: None };
    lemmas
        .iter()
        .map(|lemma| {
            Ok(match lemma {
                Lemma::WeightedPoincare => {
                    let s = weighted_poincare_check(a, z)?;
                    outcome(index, s.lhs, settings.poincare_rhs_scale * s.rhs)
                }
                Lemma::TruncationLinf => {
                    let t = truncation_bounds(z, settings.truncation_level)?;
                    outcome(index, t.linf_low, t.sqrtlog_bound)
                }
                Lemma::TruncationTail => {
                    let t = truncation_bounds(z, settings.truncation_level)?;
                    outcome(index, t.tail_hhalf, t.tail_bound)
                }
                Lemma::LogPoincare => {
                    let l = log_poincare_check(a, z)?;
                    SampleOutcome { index, lhs: l.lhs, rhs: l.rhs_without_c, ratio: l.ratio }
                }
                Lemma::Ladyzhenskaya => {
                    let mut zm = z.clone();
                    zm.subtract_mean();
                    match ladyzhenskaya_ratio(&zm) {
                        Ok(r) => SampleOutcome { index, lhs: r, rhs: 1.0, ratio: Some(r) },
                        Err(Error::Degenerate(_)) => skipped,
                        Err(e) => return Err(e),
                    }
                }
                Lemma::Desjardins | Lemma::DesjardinsLiteral => match desjardins_check(a, z, rho_star) {
                    Ok(d) if *lemma == Lemma::Desjardins => outcome(index, d.lhs, d.rhs_core + d.mean_term),
                    Ok(d) => outcome(index, d.lhs, d.rhs_core),
                    Err(Error::VacuumSupport) => skipped,
                    Err(e) => return Err(e),
                },
            })
        })
        .collect()
}

/// Evaluates `lemmas` on every member of `ensemble` sampled on `grid`.
///
/// Samples are split into contiguous blocks across worker threads. Each sample is
/// regenerated from `(seed, index)`, so the result does not depend on the thread count.
pub fn evaluate_ensemble(
    ensemble: &FieldEnsemble,
    grid: Grid,
    lemmas: &[Lemma],
    settings: &EvalSettings,
) -> Result<Vec<InequalityReport>> {
    ensemble.validate()?;
    let count = ensemble.count;
    let threads = settings.threads.clamp(1, count.max(1));
    let block = count.div_ceil(threads).max(1);
    let rows: Vec<Vec<SampleOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..count)
            .step_by(block)
            .map(|start| {
                scope.spawn(move || {
                    (start..(start + block).min(count))
                        .map(|i| {
                            let (a, z) = sample_random_field(ensemble, grid, i)?;
                            evaluate_pair(i, &a, &z, ensemble.rho_star, lemmas, settings)
                        })
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("ensemble worker panicked")).collect::<Result<Vec<_>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    Ok(lemmas
        .iter()
        .enumerate()
        .map(|(j, &lemma)| InequalityReport::from_samples(lemma, grid.n(), rows.iter().map(|r| r[j]).collect()))
        .collect())
}

/// One CSV line per lemma: name, grid, assertable, samples, max ratio, violations, refinement.
pub fn summary_csv(reports: &[InequalityReport]) -> String {
    let fmt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:.6e}"));
    let mut out =
        String::from("lemma,n,assertable,samples,max_ratio,violations,fine_n,fine_max_ratio,relative_change,stable\n");
    for r in reports {
        let (fine_n, fine_max, change, stable) = match &r.refinement {
            Some(f) => (f.fine_n.to_string(), fmt(f.fine_max_ratio), fmt(f.relative_change), f.stable.to_string()),
            None => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{fine_n},{fine_max},{change},{stable}\n",
            r.lemma.name(),
            r.n,
            r.assertable,
            r.samples.len(),
            fmt(r.max_ratio),
            r.violations.len(),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize) -> FieldEnsemble {
        FieldEnsemble { count, ..Default::default() }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let grid = Grid::square(16);
        let one = evaluate_ensemble(&small(9), grid, &Lemma::ALL, &EvalSettings { threads: 1, ..Default::default() });
        let four = evaluate_ensemble(&small(9), grid, &Lemma::ALL, &EvalSettings { threads: 4, ..Default::default() });
        let (one, four) = (one.unwrap(), four.unwrap());
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
    }

    #[test]
    fn empty_ensemble_gives_empty_reports() {
        let reports = evaluate_ensemble(&small(0), Grid::square(16), &Lemma::ALL, &EvalSettings::default()).unwrap();
        assert_eq!(reports.len(), Lemma::ALL.len());
        assert!(reports.iter().all(|r| r.samples.is_empty() && r.max_ratio.is_none() && r.passed()));
    }

    #[test]
    fn scaled_down_poincare_is_caught() {
        let settings = EvalSettings { poincare_rhs_scale: 0.01, ..Default::default() };
        let r = evaluate_ensemble(&small(20), Grid::square(16), &[Lemma::WeightedPoincare], &settings).unwrap();
        assert!(!r[0].violations.is_empty() && !r[0].passed());
    }

    #[test]
    fn refinement_flag_follows_the_tolerance() {
        let mut coarse = InequalityReport::from_samples(Lemma::Ladyzhenskaya, 16, vec![outcome(0, 1.0, 1.0)]);
        let fine = InequalityReport::from_samples(Lemma::Ladyzhenskaya, 32, vec![outcome(0, 1.3, 1.0)]);
        coarse.attach_refinement(&fine, 0.5);
        assert!(coarse.passed());
        coarse.attach_refinement(&fine, 0.1);
        assert!(!coarse.passed());
    }

    #[test]
    fn summary_has_a_row_per_lemma() {
        let reports = evaluate_ensemble(&small(3), Grid::square(16), &Lemma::ALL, &EvalSettings::default()).unwrap();
        assert_eq!(summary_csv(&reports).lines().count(), 1 + Lemma::ALL.len());
    }
}
