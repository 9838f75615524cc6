//! The JSON run configuration: parsing, validation and environment overrides.

use std::path::{Path, PathBuf};

use periodic_dirac::asymptotics::ReferenceForm;
use periodic_dirac::bands::BandOptions;
use periodic_dirac::exclusion::Window;
use periodic_dirac::floquet::FloquetOptions;
use periodic_dirac::propagator::IntegratorOptions;
use periodic_dirac::{PeriodicPotential, PerturbationField};
use serde::{Deserialize, Serialize};

pub const ENV_WORKERS: &str = "PDIRAC_WORKERS";
pub const ENV_OUT_DIR: &str = "PDIRAC_OUT_DIR";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("config line {line}, column {column}: {message}")]
    Invalid { line: usize, column: usize, message: String },
    #[error("config: {0}")]
    Inconsistent(String),
    #[error("environment variable {var}: {message}")]
    Env { var: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mass: f64,
    pub potential: PeriodicPotential,
    pub perturbation: PerturbationField,
    pub window: WindowSpec,
    pub grid: GridSpec,
    pub sampling: Sampling,
    pub tolerances: Tolerances,
    pub output: OutputSpec,
    pub asymptotics: AsymptoticsSpec,
    pub edge_limits: EdgeLimitsSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            potential: PeriodicPotential::zero(1.0).expect("unit period"),
            perturbation: PerturbationField::NormOnly { p: 1.0, norm: 0.5 },
            window: WindowSpec::default(),
            grid: GridSpec::default(),
            sampling: Sampling::default(),
            tolerances: Tolerances::default(),
            output: OutputSpec::default(),
            asymptotics: AsymptoticsSpec::default(),
            edge_limits: EdgeLimitsSpec::default(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self { re: [-5.0, 5.0], im: [-3.0, 3.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { nx: 200, ny: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    /// Trajectory nodes per period for φ±.
    pub n_samples: usize,
    /// Real-axis samples of the discriminant when scanning for edges.
    pub n_scan: usize,
    /// Simpson nodes for the edge integrals (odd).
    pub n_quad: usize,
    /// x-grid for the large-Im λ comparison.
    pub n_x: usize,
    /// Im k·a above which φ₋ is taken from the reflected potential.
    pub reflect_above: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { n_samples: 2048, n_scan: 2000, n_quad: 4097, n_x: 2048, reflect_above: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let o = IntegratorOptions::default();
        Self { atol: o.atol, rtol: o.rtol, max_steps: o.max_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub svg: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: PathBuf::from("."), svg: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    TwoTerm,
    OneTerm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsSpec {
    pub mu: f64,
    /// First α; the sequence doubles from here.
    pub alpha0: f64,
    pub count: usize,
    pub form: FormSpec,
}

impl Default for AsymptoticsSpec {
    fn default() -> Self {
        Self { mu: 0.0, alpha0: 40.0, count: 8, form: FormSpec::TwoTerm }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeLimitsSpec {
    /// Distances t from each edge; both λ₀ ± t are probed.
    pub offsets: Vec<f64>,
}

impl Default for EdgeLimitsSpec {
    fn default() -> Self {
        Self { offsets: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6] }
    }
}

/// A validation failure before it has been placed in the source text.
struct Issue {
    path: Vec<&'static str>,
    message: String,
}

fn issue(path: &[&'static str], message: impl Into<String>) -> Issue {
    Issue { path: path.to_vec(), message: message.into() }
}

impl RunConfig {
    pub fn p(&self) -> f64 {
        self.perturbation.p()
    }

    pub fn window(&self) -> Window {
        Window { re: (self.window.re[0], self.window.re[1]), im: (self.window.im[0], self.window.im[1]) }
    }

    pub fn integrator(&self) -> IntegratorOptions {
        IntegratorOptions {
            atol: self.tolerances.atol,
            rtol: self.tolerances.rtol,
            max_steps: self.tolerances.max_steps,
            adaptive_only: false,
        }
    }

    pub fn floquet(&self) -> FloquetOptions {
        FloquetOptions {
            n_samples: self.sampling.n_samples,
            integrator: self.integrator(),
            reflect_above: self.sampling.reflect_above,
            shift: None,
        }
    }

    pub fn bands(&self) -> BandOptions {
        BandOptions { n_scan: self.sampling.n_scan, n_quad: self.sampling.n_quad, integrator: self.integrator() }
    }

    pub fn reference_form(&self) -> ReferenceForm {
        match self.asymptotics.form {
            FormSpec::TwoTerm => ReferenceForm::TwoTerm,
            FormSpec::OneTerm => ReferenceForm::OneTerm,
        }
    }

    fn check(&self) -> Option<Issue> {
        let range_ok = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] < r[1];
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Some(issue(&["mass"], format!("mass must be finite and >= 0, got {}", self.mass)));
        }
        if let Err(e) = self.perturbation.validate() {
            return Some(issue(&["perturbation"], e.to_string()));
        }
        if !range_ok(self.window.re) {
            return Some(issue(&["window", "re"], format!("window re range {:?} is empty", self.window.re)));
        }
        if !range_ok(self.window.im) {
            return Some(issue(&["window", "im"], format!("window im range {:?} is empty", self.window.im)));
        }
        if self.grid.nx < 2 {
            return Some(issue(&["grid", "nx"], "nx must be at least 2"));
        }
        if self.grid.ny < 2 {
            return Some(issue(&["grid", "ny"], "ny must be at least 2"));
        }
        let s = &self.sampling;
        if s.n_samples < 16 {
            return Some(issue(&["sampling", "n_samples"], "n_samples must be at least 16"));
        }
        if s.n_scan < 100 {
            return Some(issue(&["sampling", "n_scan"], "n_scan must be at least 100"));
        }
        if s.n_quad < 3 || s.n_quad.is_multiple_of(2) {
            return Some(issue(&["sampling", "n_quad"], "n_quad must be odd and at least 3"));
        }
        if s.n_x < 2 {
            return Some(issue(&["sampling", "n_x"], "n_x must be at least 2"));
        }
        if !(s.reflect_above.is_finite() && s.reflect_above >= 0.0) {
            return Some(issue(&["sampling", "reflect_above"], "reflect_above must be finite and >= 0"));
        }
        let t = &self.tolerances;
        if !(t.atol.is_finite() && t.atol > 0.0) {
            return Some(issue(&["tolerances", "atol"], format!("atol must be positive, got {}", t.atol)));
        }
        if !(t.rtol.is_finite() && t.rtol > 0.0) {
            return Some(issue(&["tolerances", "rtol"], format!("rtol must be positive, got {}", t.rtol)));
        }
        if t.max_steps == 0 {
            return Some(issue(&["tolerances", "max_steps"], "max_steps must be positive"));
        }
        let a = &self.asymptotics;
        if !a.mu.is_finite() {
            return Some(issue(&["asymptotics", "mu"], "mu must be finite"));
        }
        if !(a.alpha0.is_finite() && a.alpha0 > 0.0) {
            return Some(issue(&["asymptotics", "alpha0"], "alpha0 must be positive"));
        }
        if !(2..=40).contains(&a.count) {
            return Some(issue(&["asymptotics", "count"], "count must be between 2 and 40"));
        }
        let offs = &self.edge_limits.offsets;
        if offs.is_empty() || offs.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Some(issue(&["edge_limits", "offsets"], "offsets must be a nonempty list of positive numbers"));
        }
        if self.workers == Some(0) {
            return Some(issue(&["workers"], "workers must be at least 1"));
        }
        None
    }

    /// Semantic checks on an already-built config, without source positions.
    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.check() {
            None => Ok(()),
            Some(i) => Err(ConfigError::Invalid { line: 0, column: 0, message: format!("{}: {}", i.path.join("."), i.message) }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// Applies `PDIRAC_WORKERS` and `PDIRAC_OUT_DIR` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = lookup(ENV_WORKERS) {
            match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => self.workers = Some(n),
                _ => return Err(ConfigError::Env { var: ENV_WORKERS, message: format!("expected a positive integer, got {v:?}") }),
            }
        }
        if let Some(v) = lookup(ENV_OUT_DIR) {
            if v.is_empty() {
                return Err(ConfigError::Env { var: ENV_OUT_DIR, message: "empty path".into() });
            }
            self.output.dir = PathBuf::from(v);
        }
        Ok(())
    }
}

/// 1-based line and column of byte offset `at`.
fn line_col(text: &str, at: usize) -> (usize, usize) {
    let before = &text[..at];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(at, |nl| at - nl - 1) + 1;
    (line, column)
}

/// Position of the innermost key of `path` that occurs in `text`.
fn locate(text: &str, path: &[&str]) -> (usize, usize) {
    let mut at = None;
    let mut from = 0;
    for key in path {
        let pat = format!("\"{key}\"");
        match text[from..].find(&pat) {
            Some(i) => {
                from += i;
                at = Some(from);
                from += pat.len();
            }
            None => break,
        }
    }
    at.map_or((1, 1), |i| line_col(text, i))
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
        // errors raised while building the potential surface after its closing brace
        let (line, column) = if e.is_data() && e.to_string().starts_with("invalid potential") {
            locate(text, &["potential"])
        } else {
            (e.line(), e.column())
        };
        ConfigError::Invalid { line, column, message: e.to_string() }
    })?;
    if let Some(i) = cfg.check() {
        let (line, column) = locate(text, &i.path);
        return Err(ConfigError::Invalid { line, column, message: format!("{}: {}", i.path.join("."), i.message) });
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read { path: path.to_path_buf(), message: e.to_string() })?;
    parse(&text)
}
