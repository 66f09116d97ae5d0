//! Run configuration: TOML with dotted keys, every key optional, unknown keys rejected.

use std::path::{Path, PathBuf};

use sbp_core::radial::MIN_NODES;
use sbp_core::{GridSpec, SbpParams, SolveOptions};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config error: {key}: {message}")]
    Invalid { key: String, message: String },
    #[error("config error: {0}")]
    Parse(String),
    #[error("config error: cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn bad<T>(key: &str, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid {
        key: key.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub omega: f64,
    pub mu: f64,
    pub a: f64,
    pub p: f64,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig { omega: 1.0, mu: 1.0, a: 1.0, p: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: Option<usize>,
    /// Defaults to `40/√ω`.
    pub r_max: Option<f64>,
    pub grading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub seed: u64,
    pub clamp_nonnegative: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions::default();
        SolverConfig {
            tol: d.tol,
            max_iter: d.max_iter,
            step0: d.step0,
            backtrack: d.backtrack,
            seed: d.seed,
            clamp_nonnegative: d.clamp_nonnegative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub a_list: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { a_list: sbp_core::asymptotics::dyadic_a_list() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SobolevConfig {
    pub r_max: f64,
    pub n: usize,
    pub grading: f64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        SobolevConfig { r_max: 200.0, n: 8192, grading: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub output: OutputConfig,
    pub sweep: SweepConfig,
    pub sobolev: SobolevConfig,
}

fn positive(key: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        bad(key, format!("must be > 0, got {v}"))
    }
}

fn nodes(key: &str, n: usize) -> Result<(), ConfigError> {
    if n >= MIN_NODES {
        Ok(())
    } else {
        bad(key, format!("must be >= {MIN_NODES}, got {n}"))
    }
}

fn grading(key: &str, g: f64) -> Result<(), ConfigError> {
    if (1.0..=4.0).contains(&g) {
        Ok(())
    } else {
        bad(key, format!("must lie in [1, 4], got {g}"))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `"default"` names the packaged configuration.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        if path.as_os_str() == "default" {
            return Self::parse(DEFAULT_CONFIG);
        }
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.problem;
        positive("problem.omega", p.omega)?;
        positive("problem.mu", p.mu)?;
        if !(p.a.is_finite() && p.a >= 0.0) {
            return bad("problem.a", format!("must be >= 0, got {}", p.a));
        }
        if !(p.p > 2.0 && p.p <= 6.0) {
            return bad("problem.p", format!("must lie in p ∈ (2, 6], got {}", p.p));
        }
        let g = self.grid_spec();
        nodes("grid.n", g.n)?;
        positive("grid.r_max", g.r_max)?;
        grading("grid.grading", g.grading)?;
        let s = &self.solver;
        positive("solver.tol", s.tol)?;
        if s.max_iter == 0 {
            return bad("solver.max_iter", "must be >= 1");
        }
        positive("solver.step0", s.step0)?;
        if !(s.backtrack > 0.0 && s.backtrack < 1.0) {
            return bad("solver.backtrack", format!("must lie in (0, 1), got {}", s.backtrack));
        }
        if self.output.formats.is_empty() {
            return bad("output.formats", "must name at least one of \"csv\", \"json\"");
        }
        let a = &self.sweep.a_list;
        if a.is_empty() {
            return bad("sweep.a_list", "must not be empty");
        }
        if let Some(x) = a.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return bad("sweep.a_list", format!("entries must be > 0, got {x}"));
        }
        if a.windows(2).any(|w| w[1] >= w[0]) {
            return bad("sweep.a_list", "must be strictly decreasing");
        }
        positive("sobolev.r_max", self.sobolev.r_max)?;
        nodes("sobolev.n", self.sobolev.n)?;
        grading("sobolev.grading", self.sobolev.grading)?;
        Ok(())
    }

    pub fn params(&self) -> SbpParams {
        let p = &self.problem;
        SbpParams::new(p.omega, p.mu, p.a, p.p).expect("validated")
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            n: self.grid.n.unwrap_or(2048),
            r_max: self.grid.r_max.unwrap_or(40.0 / self.problem.omega.sqrt()),
            grading: self.grid.grading.unwrap_or(2.0),
        }
    }

    pub fn solve_options(&self) -> SolveOptions {
        let s = &self.solver;
        SolveOptions {
            tol: s.tol,
            max_iter: s.max_iter,
            step0: s.step0,
            backtrack: s.backtrack,
            seed: s.seed,
            clamp_nonnegative: s.clamp_nonnegative,
        }
    }
}
