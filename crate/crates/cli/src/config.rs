//! Run configuration: one TOML table per subcommand, unknown keys rejected.
//! Every field has a default, so an empty file (or none) is a valid run.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sunladder::lattice::Boundary;

use crate::CliError;

fn three() -> usize {
    3
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "SpectrumConfig::default_length")]
    pub length: usize,
    #[serde(default = "SpectrumConfig::default_legs")]
    pub legs: usize,
    #[serde(default = "SpectrumConfig::default_boundary")]
    pub boundary: Boundary,
    #[serde(default = "three")]
    pub n_colors: usize,
    #[serde(default = "one")]
    pub j: f64,
    /// Uniform grid on [0, 1]; ignored when `tau_grid` is set.
    #[serde(default = "SpectrumConfig::default_points")]
    pub tau_points: usize,
    #[serde(default)]
    pub tau_grid: Option<Vec<f64>>,
    /// Sector charge; defaults to the balanced sector.
    #[serde(default)]
    pub charge: Option<Vec<i32>>,
    #[serde(default)]
    pub mu3: f64,
    #[serde(default)]
    pub mu8: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SpectrumConfig {
    fn default_length() -> usize {
        14
    }
    fn default_legs() -> usize {
        1
    }
    fn default_boundary() -> Boundary {
        Boundary::Open
    }
    fn default_points() -> usize {
        21
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuenchConfig {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "SpectrumConfig::default_length")]
    pub length: usize,
    #[serde(default = "three")]
    pub n_colors: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "QuenchConfig::default_dt")]
    pub dt: f64,
    #[serde(default = "QuenchConfig::default_t_max")]
    pub t_max: f64,
}

impl QuenchConfig {
    fn default_dt() -> f64 {
        0.05
    }
    fn default_t_max() -> f64 {
        20.0
    }
}

/// Which points the scaling fit drops near thermal saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SaturationConfig {
    #[serde(default)]
    pub max_xi: Option<f64>,
    #[serde(default)]
    pub max_chi2_dof: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "XiConfig::default_length")]
    pub length: usize,
    #[serde(default = "XiConfig::default_legs")]
    pub legs: Vec<usize>,
    #[serde(default = "three")]
    pub n_colors: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "XiConfig::default_beta")]
    pub beta: f64,
    #[serde(default = "XiConfig::default_measurements")]
    pub measurements: usize,
    /// Defaults to 10% of all sweeps, at least 10⁴.
    #[serde(default)]
    pub thermalization: Option<usize>,
    #[serde(default = "XiConfig::default_slices")]
    pub slices: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub window: Option<(usize, usize)>,
    #[serde(default)]
    pub saturation: SaturationConfig,
}

impl XiConfig {
    fn default_length() -> usize {
        192
    }
    fn default_legs() -> Vec<usize> {
        vec![2, 4, 6]
    }
    fn default_beta() -> f64 {
        10.0
    }
    fn default_measurements() -> usize {
        20_000
    }
    fn default_slices() -> usize {
        sunladder::qmc::DEFAULT_SLICES
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectSweepConfig {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "XiConfig::default_length")]
    pub length: usize,
    #[serde(default = "DefectSweepConfig::default_legs")]
    pub legs: Vec<usize>,
    #[serde(default = "three")]
    pub n_colors: usize,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default = "XiConfig::default_beta")]
    pub beta: f64,
    #[serde(default = "DefectSweepConfig::default_measurements")]
    pub measurements: usize,
    #[serde(default)]
    pub thermalization: Option<usize>,
    #[serde(default = "XiConfig::default_slices")]
    pub slices: usize,
    #[serde(default = "DefectSweepConfig::default_concentrations")]
    pub concentrations: Vec<f64>,
    #[serde(default = "DefectSweepConfig::default_realizations")]
    pub realizations: usize,
    /// Realization `r` uses seed `seed + r`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub window: Option<(usize, usize)>,
}

impl DefectSweepConfig {
    fn default_legs() -> Vec<usize> {
        vec![4]
    }
    fn default_measurements() -> usize {
        6_000
    }
    fn default_concentrations() -> Vec<f64> {
        vec![0.0, 0.01]
    }
    fn default_realizations() -> usize {
        10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "CouplingConfig::default_t")]
    pub t: Vec<f64>,
    #[serde(default = "CouplingConfig::default_u")]
    pub u: Vec<f64>,
    #[serde(default = "CouplingConfig::default_v")]
    pub v: Vec<f64>,
    #[serde(default = "CouplingConfig::default_n")]
    pub n_colors: Vec<usize>,
}

impl CouplingConfig {
    fn default_t() -> Vec<f64> {
        vec![1.0]
    }
    fn default_u() -> Vec<f64> {
        vec![10.0]
    }
    fn default_v() -> Vec<f64> {
        vec![10.0]
    }
    fn default_n() -> Vec<usize> {
        vec![3]
    }
}

/// The file a config came from, kept for error locations.
pub struct Source {
    pub path: Option<PathBuf>,
    pub text: String,
}

impl Source {
    pub fn read(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Source { path: None, text: String::new() }),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", p.display())))?;
                Ok(Source { path: Some(p.to_path_buf()), text })
            }
        }
    }

    fn name(&self) -> String {
        self.path.as_ref().map_or_else(|| "<config>".into(), |p| p.display().to_string())
    }

    fn line_col(&self, offset: usize) -> (usize, usize) {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
        (line, col)
    }

    pub fn parse<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        toml::from_str(&self.text).map_err(|e| {
            let at = match e.span() {
                Some(s) => {
                    let (l, c) = self.line_col(s.start);
                    format!("{}:{l}:{c}", self.name())
                }
                None => self.name(),
            };
            CliError::Validation(format!("{at}: {}", e.message().trim()))
        })
    }

    /// Validation error pointing at the line that sets `key`, or at the
    /// flag when the file does not mention it.
    pub fn invalid(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        let line = self.text.lines().position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
        });
        match line {
            Some(k) => CliError::Validation(format!("{}:{}: {key}: {msg}", self.name(), k + 1)),
            None => CliError::Validation(format!("{key}: {msg}")),
        }
    }
}

fn check(src: &Source, ok: bool, key: &str, msg: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(src.invalid(key, msg))
    }
}

fn check_common(src: &Source, length: usize, n_colors: usize, j: f64) -> Result<(), CliError> {
    check(src, length >= 2, "length", "must be at least 2")?;
    check(src, n_colors >= 2, "n_colors", "must be at least 2")?;
    check(src, j.is_finite() && j > 0.0, "j", "must be positive")
}

impl SpectrumConfig {
    pub fn validate(&self, src: &Source) -> Result<(), CliError> {
        check_common(src, self.length, self.n_colors, self.j)?;
        check(src, self.legs >= 1, "legs", "must be at least 1")?;
        match &self.tau_grid {
            Some(g) => check(
                src,
                !g.is_empty() && g.iter().all(|t| (0.0..=1.0).contains(t)),
                "tau_grid",
                "must be non-empty with values in [0, 1]",
            )?,
            None => check(src, self.tau_points >= 2, "tau_points", "must be at least 2")?,
        }
        if let Some(q) = &self.charge {
            check(src, q.len() == self.n_colors, "charge", "needs one entry per color")?;
        }
        check(src, self.mu3.is_finite() && self.mu8.is_finite(), "mu3", "must be finite")
    }
}

impl QuenchConfig {
    pub fn validate(&self, src: &Source) -> Result<(), CliError> {
        check_common(src, self.length, self.n_colors, self.j)?;
        check(src, self.length.is_multiple_of(2), "length", "the false vacuum needs an even chain")?;
        check(src, self.dt.is_finite() && self.dt > 0.0, "dt", "must be positive")?;
        check(src, self.t_max.is_finite() && self.t_max >= 0.0, "t_max", "must be non-negative")
    }
}

fn check_qmc(src: &Source, legs: &[usize], beta: f64, measurements: usize, slices: usize) -> Result<(), CliError> {
    check(src, !legs.is_empty() && legs.iter().all(|&n| n >= 1), "legs", "must list leg counts >= 1")?;
    check(src, beta.is_finite() && beta > 0.0, "beta", "must be positive")?;
    check(src, measurements > 0, "measurements", "must be positive")?;
    check(src, slices > 0, "slices", "must be positive")
}

impl XiConfig {
    pub fn validate(&self, src: &Source) -> Result<(), CliError> {
        check_common(src, self.length, self.n_colors, self.j)?;
        check(src, self.length.is_multiple_of(2), "length", "must be even on a periodic ladder")?;
        check_qmc(src, &self.legs, self.beta, self.measurements, self.slices)?;
        if let Some((lo, hi)) = self.window {
            check(src, lo < hi && hi <= self.length / 2, "window", "needs lo < hi <= length/2")?;
        }
        let s = self.saturation;
        check(src, s.max_xi.is_none() || s.max_chi2_dof.is_none(), "max_xi", "set at most one saturation rule")?;
        check(src, s.max_xi.is_none_or(|m| m > 0.0), "max_xi", "must be positive")?;
        check(src, s.max_chi2_dof.is_none_or(|m| m > 0.0), "max_chi2_dof", "must be positive")
    }
}

impl DefectSweepConfig {
    pub fn validate(&self, src: &Source) -> Result<(), CliError> {
        check_common(src, self.length, self.n_colors, self.j)?;
        check(src, self.length.is_multiple_of(2), "length", "must be even on a periodic ladder")?;
        check_qmc(src, &self.legs, self.beta, self.measurements, self.slices)?;
        check(
            src,
            !self.concentrations.is_empty() && self.concentrations.iter().all(|p| (0.0..0.5).contains(p)),
            "concentrations",
            "must list values in [0, 0.5)",
        )?;
        check(src, self.realizations >= 1, "realizations", "must be at least 1")?;
        if let Some((lo, hi)) = self.window {
            check(src, lo < hi && hi <= self.length / 2, "window", "needs lo < hi <= length/2")?;
        }
        Ok(())
    }
}

impl CouplingConfig {
    pub fn validate(&self, src: &Source) -> Result<(), CliError> {
        check(src, !self.t.is_empty() && self.t.iter().all(|x| x.is_finite()), "t", "must list finite values")?;
        check(src, !self.u.is_empty() && self.u.iter().all(|x| *x > 0.0), "u", "must list positive values")?;
        check(src, !self.v.is_empty() && self.v.iter().all(|x| x.is_finite()), "v", "must list finite values")?;
        check(src, !self.n_colors.is_empty() && self.n_colors.iter().all(|&n| n >= 2), "n_colors", "must list values >= 2")
    }
}
