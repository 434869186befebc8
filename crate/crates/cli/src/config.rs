//! Run configuration: a TOML document with one table per concern.
//!
//! ```toml
//! [scenario]
//! kind = "drop"        # taylor_green | drop | bubble | two_phase | random | rest
//! radius = 0.25
//!
//! [solver]
//! n = 128
//! dt = 1e-3
//! t_end = 0.5
//!
//! [output]
//! dir = "out"
//! snapshot_every = 100
//! ```
//!
//! Every table and key is optional; omitted values take the defaults below.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;

use ins_core::diagnostics::ShiftTriple;
use ins_core::inequalities::{DensityModel, EvalSettings, FieldEnsemble, Lemma};
use ins_core::solver::{Scenario, SolverConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions {
    /// Exponents of the reported `‖ρ‖_p`.
    pub p_list: Vec<f64>,
    /// Spatial exponents kept for the Bochner norms of `∇²v` and `∇P`.
    pub r_list: Vec<f64>,
    /// `(p, r, s)` rows of the shift-of-integrability table.
    pub shift: Vec<ShiftTriple>,
    /// Exponents `α` of the fractional time-regularity check.
    pub alphas: Vec<f64>,
    /// Spatial exponent of the fractional check.
    pub fractional_p: f64,
    /// Velocity samples for the fractional check are taken every this many steps.
    pub fractional_every: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        DiagnosticsOptions {
            p_list: vec![1.0, 2.0, 4.0],
            r_list: vec![2.0, 4.0],
            shift: vec![ShiftTriple { p: 4.0, r: 2.0, s: 1.0 }, ShiftTriple { p: f64::INFINITY, r: 2.0, s: 1.5 }],
            alphas: vec![0.1, 0.25, 0.4],
            fractional_p: 4.0,
            fractional_every: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: PathBuf,
    /// Field snapshots every this many steps, plus the initial and final state; 0 keeps only those two.
    pub snapshot_every: usize,
}

impl Default for OutputOptions {
    fn default() -> Self {
        OutputOptions { dir: PathBuf::from("out"), snapshot_every: 100 }
    }
}

/// Marker tracking of the patch boundary; ignored for scenarios without a patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryOptions {
    /// Number of markers; 0 disables tracking.
    pub markers: usize,
    /// Hölder exponent of the tangent seminorm.
    pub alpha: f64,
    /// Seminorm samples every this many steps.
    pub sample_every: usize,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions { markers: 512, alpha: 0.5, sample_every: 10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonOptions {
    /// Floors of the continuation family, strictly decreasing.
    pub eps: Vec<f64>,
    pub sample_every: usize,
}

impl Default for EpsilonOptions {
    fn default() -> Self {
        EpsilonOptions { eps: vec![1e-2, 1e-3, 1e-4], sample_every: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    /// Grid sizes; fitted constants are compared between consecutive entries.
    pub grids: Vec<usize>,
    pub lemmas: Vec<Lemma>,
    /// Largest accepted relative change of a fitted constant under refinement.
    pub refinement_tol: f64,
    pub truncation_level: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    /// Scales the weighted Poincaré right side. Anything but 1 is a negative control.
    pub poincare_rhs_scale: f64,
    pub ensemble: FieldEnsemble,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            grids: vec![64],
            lemmas: Lemma::ALL.to_vec(),
            refinement_tol: 0.5,
            truncation_level: EvalSettings::default().truncation_level,
            threads: 0,
            poincare_rhs_scale: 1.0,
            ensemble: FieldEnsemble::default(),
        }
    }
}

impl SuiteOptions {
    pub fn eval_settings(&self) -> EvalSettings {
        let auto = EvalSettings::default().threads;
        EvalSettings {
            truncation_level: self.truncation_level,
            threads: if self.threads == 0 { auto } else { self.threads },
            poincare_rhs_scale: self.poincare_rhs_scale,
        }
    }

    /// The ensemble as sampled on every grid: with several grids the band limit is
    /// pinned to the coarsest one, so each index names one field at every resolution.
    pub fn pinned_ensemble(&self) -> FieldEnsemble {
        let mut ens = self.ensemble.clone();
        if ens.max_mode.is_none() && self.grids.len() > 1 {
            ens.max_mode = self.grids.iter().min().map(|n| n / 4);
        }
        ens
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub solver: SolverConfig,
    pub diagnostics: DiagnosticsOptions,
    pub output: OutputOptions,
    pub boundary: BoundaryOptions,
    pub epsilon: EpsilonOptions,
    pub ineq: SuiteOptions,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line of the offending key or table, when it can be located.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Table header of each line, with `None` before the first header.
fn sections(text: &str) -> Vec<Option<String>> {
    let mut current = None;
    text.lines()
        .map(|line| {
            let t = line.trim();
            if t.starts_with('[') {
                current = Some(t.trim_matches(|c| c == '[' || c == ']').trim().to_owned());
            }
            current.clone()
        })
        .collect()
}

fn key_of(line: &str) -> Option<&str> {
    let (lhs, _) = line.split_once('=')?;
    let key = lhs.trim().trim_matches('"');
    (!key.is_empty() && !key.starts_with('#')).then_some(key)
}

/// Line of `key` inside `[section]` (or its subtables), else of the header itself.
fn locate(text: &str, section: &str, key: Option<&str>) -> Option<usize> {
    let secs = sections(text);
    let in_section = |s: &Option<String>| {
        s.as_deref().is_some_and(|s| s == section || s.strip_prefix(section).is_some_and(|r| r.starts_with('.')))
    };
    if let Some(key) = key {
        let hit = text.lines().zip(&secs).position(|(line, s)| in_section(s) && key_of(line) == Some(key));
        if let Some(i) = hit {
            return Some(i + 1);
        }
    }
    text.lines().zip(&secs).position(|(line, s)| in_section(s) && line.trim_start().starts_with('[')).map(|i| i + 1)
}

/// First key of `section` present in the text whose name occurs as a word of `message`.
fn key_named_in(text: &str, section: &str, message: &str) -> Option<String> {
    let words: Vec<&str> = message.split(|c: char| !(c.is_alphanumeric() || c == '_')).collect();
    let secs = sections(text);
    text.lines()
        .zip(&secs)
        .filter(|(_, s)| s.as_deref() == Some(section))
        .filter_map(|(line, _)| key_of(line))
        .find(|k| words.contains(k))
        .map(str::to_owned)
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

fn from_toml(text: &str, err: &toml::de::Error) -> ConfigError {
    let message = err.message().trim().to_owned();
    let span: Option<Range<usize>> = err.span();
    let mut line = span.as_ref().map(|s| line_of(text, s.start));
    // Errors raised inside a table often carry the span of the table or its header
    // only; narrow to the line naming the key or value the message quotes.
    if let (Some(span), Some(name)) = (span, backticked(&message)) {
        let first = line_of(text, span.start);
        let secs = sections(text);
        let section = secs.get(first - 1).cloned().flatten();
        let quoted = format!("\"{name}\"");
        let hit = text.lines().zip(&secs).enumerate().skip(first - 1).find(|(_, (l, s))| {
            **s == section && (key_of(l) == Some(name) || l.split_once('=').is_some_and(|(_, v)| v.contains(&quoted)))
        });
        if let Some((i, _)) = hit {
            line = Some(i + 1);
        }
    }
    ConfigError { line, message }
}

impl ScenarioConfig {
    /// Parses and validates a configuration, locating errors in `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| from_toml(text, &e))?;
        cfg.validate().map_err(|(section, message)| {
            let key = key_named_in(text, section, &message);
            ConfigError { line: locate(text, section, key.as_deref()), message: format!("[{section}] {message}") }
        })?;
        Ok(cfg)
    }

    /// The configuration as TOML; parsing the result gives back `self`.
    pub fn emit(&self) -> String {
        toml::to_string(self).expect("configuration serializes to TOML")
    }

    /// Cross-table invariants, reported with the table they belong to.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        self.scenario.validate().map_err(|e| ("scenario", e.to_string()))?;
        self.solver.validate().map_err(|e| ("solver", e.to_string()))?;
        let bound = self.scenario.density_bound();
        if bound > self.solver.rho_star {
            return Err((
                "scenario",
                format!("initial density reaches {bound} above rho_star = {}", self.solver.rho_star),
            ));
        }

        let d = &self.diagnostics;
        if let Some(p) = d.p_list.iter().chain(&d.r_list).chain([&d.fractional_p]).find(|p| !(**p >= 1.0)) {
            return Err(("diagnostics", format!("exponent {p} below 1 in p_list, r_list or fractional_p")));
        }
        if let Some(a) = d.alphas.iter().find(|a| !(**a > 0.0 && **a < 0.5)) {
            return Err(("diagnostics", format!("alphas entry {a} outside (0, 1/2)")));
        }
        if d.fractional_every == 0 {
            return Err(("diagnostics", "fractional_every must be positive".into()));
        }
        if let Some(t) = d.shift.iter().find(|t| !(t.p > 0.0 && t.r >= 1.0 && t.s > 0.0)) {
            return Err((
                "diagnostics",
                format!("shift triple ({}, {}, {}) has a nonpositive exponent", t.p, t.r, t.s),
            ));
        }

        let b = &self.boundary;
        if !(b.alpha > 0.0 && b.alpha <= 1.0) {
            return Err(("boundary", format!("alpha = {} outside (0, 1]", b.alpha)));
        }
        if b.markers != 0 && b.markers < 8 {
            return Err(("boundary", format!("markers = {} too few to resolve a curve (need 8)", b.markers)));
        }
        if b.sample_every == 0 {
            return Err(("boundary", "sample_every must be positive".into()));
        }

        let e = &self.epsilon;
        if e.eps.iter().any(|x| !(*x > 0.0 && *x <= self.solver.rho_star)) {
            return Err(("epsilon", "eps entries must lie in (0, rho_star]".into()));
        }
        if e.eps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(("epsilon", "eps must be strictly decreasing".into()));
        }
        if e.sample_every == 0 {
            return Err(("epsilon", "sample_every must be positive".into()));
        }

        let s = &self.ineq;
        if let Some(n) = s.grids.iter().find(|n| **n < 8 || !n.is_power_of_two()) {
            return Err(("ineq", format!("grids entry {n} must be a power of two and at least 8")));
        }
        if !(s.refinement_tol > 0.0) {
            return Err(("ineq", format!("refinement_tol = {} must be positive", s.refinement_tol)));
        }
        if let Some(kmax) = s.pinned_ensemble().max_mode {
            if let Some(n) = s.grids.iter().find(|n| 2 * kmax > **n) {
                return Err(("ineq", format!("max_mode = {kmax} is not resolved on grid {n}")));
            }
        }
        s.ensemble.validate().map_err(|e| ("ineq", e.to_string()))?;
        Ok(())
    }
}

/// Short description of the density model for reports.
pub fn density_label(model: &DensityModel) -> String {
    match model {
        DensityModel::Constant { value } => format!("constant({value})"),
        DensityModel::Patch { area_min, area_max } => format!("patch({area_min}..{area_max})"),
        DensityModel::ClippedRandom => "clipped_random".into(),
        DensityModel::Sparse { fraction } => format!("sparse({fraction})"),
    }
}
