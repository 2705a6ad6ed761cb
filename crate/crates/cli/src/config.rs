//! TOML configuration for `analyze` and `simulate`.
//!
//! Keys are kebab-case and mirror the command-line flags one to one.
//! Relative paths inside a config file resolve against the file's directory.

use std::path::{Path, PathBuf};

use bnqd::sim::LatentFunction;
use bnqd::{KernelChoice, KernelFamily};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A kernel given either by name (`"matern32"`) or as a table with
/// optional starting values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelEntry {
    Name(String),
    Table {
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lengthscale: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        noise: Option<f64>,
    },
}

impl KernelEntry {
    pub fn to_choice(&self) -> Result<KernelChoice> {
        Ok(match self {
            Self::Name(name) => KernelFamily::parse(name)?.into(),
            Self::Table { name, variance, lengthscale, offset, noise } => KernelChoice {
                family: KernelFamily::parse(name)?,
                variance: *variance,
                lengthscale: *lengthscale,
                offset: *offset,
                noise: *noise,
            },
        })
    }
}

pub fn default_kernels() -> Vec<KernelEntry> {
    ["linear", "exp", "matern32", "se"].iter().map(|s| KernelEntry::Name(s.to_string())).collect()
}

fn parse_kernels(entries: &[KernelEntry]) -> Result<Vec<KernelChoice>> {
    if entries.is_empty() {
        return Err(CliError::Config("the kernel list is empty".into()));
    }
    entries.iter().map(KernelEntry::to_choice).collect()
}

/// Settings for one `analyze` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub data: Option<PathBuf>,
    #[serde(default = "default_x_columns")]
    pub x_columns: Vec<String>,
    #[serde(default = "default_y_column")]
    pub y_column: String,
    pub threshold: Option<f64>,
    #[serde(default)]
    pub threshold_dim: usize,
    pub boundary: Option<PathBuf>,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelEntry>,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_prior_m1")]
    pub prior_m1: f64,
    pub effect_point: Option<Vec<f64>>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub curves_output: Option<PathBuf>,
    pub density_output: Option<PathBuf>,
    pub profile_output: Option<PathBuf>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default = "default_profile_count")]
    pub profile_count: usize,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
}

fn default_x_columns() -> Vec<String> {
    vec!["x".into()]
}
fn default_y_column() -> String {
    "y".into()
}
fn default_restarts() -> usize {
    5
}
fn default_max_iter() -> usize {
    500
}
fn default_tolerance() -> f64 {
    1e-5
}
fn default_prior_m1() -> f64 {
    0.5
}
fn default_output() -> PathBuf {
    "report.json".into()
}
fn default_mc_samples() -> usize {
    10_000
}
fn default_profile_count() -> usize {
    50
}
fn default_curve_points() -> usize {
    200
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

/// How observations are assigned to the intervention side.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelSpec {
    Threshold { dim: usize, x0: f64 },
    Boundary(PathBuf),
}

impl AnalyzeConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.data, &mut cfg.boundary, &mut cfg.curves_output, &mut cfg.density_output, &mut cfg.profile_output]
            .into_iter()
            .flatten()
        {
            *p = resolve(base, p);
        }
        cfg.output = resolve(base, &cfg.output);
        Ok(cfg)
    }

    pub fn data_path(&self) -> Result<&Path> {
        self.data.as_deref().ok_or_else(|| CliError::Config("no data file given (key 'data')".into()))
    }

    pub fn label_spec(&self) -> Result<LabelSpec> {
        match (&self.threshold, &self.boundary) {
            (Some(x0), None) => {
                if self.threshold_dim >= self.x_columns.len() {
                    return Err(CliError::Config(format!(
                        "threshold-dim {} is out of range for {} predictor column(s)",
                        self.threshold_dim,
                        self.x_columns.len()
                    )));
                }
                Ok(LabelSpec::Threshold { dim: self.threshold_dim, x0: *x0 })
            }
            (None, Some(path)) => {
                if self.x_columns.len() != 2 {
                    return Err(CliError::Config("a boundary requires exactly two predictor columns".into()));
                }
                Ok(LabelSpec::Boundary(path.clone()))
            }
            (Some(_), Some(_)) => Err(CliError::Config("give either 'threshold' or 'boundary', not both".into())),
            (None, None) => Err(CliError::Config("no label given: set 'threshold' or 'boundary'".into())),
        }
    }

    pub fn kernel_choices(&self) -> Result<Vec<KernelChoice>> {
        parse_kernels(&self.kernels)
    }

    pub fn validate(&self) -> Result<()> {
        self.data_path()?;
        if !(1..=2).contains(&self.x_columns.len()) {
            return Err(CliError::Config("x-columns must name one or two columns".into()));
        }
        self.label_spec()?;
        self.kernel_choices()?;
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(CliError::Config("restarts and max-iter must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(CliError::Config("tolerance must be positive".into()));
        }
        if !(self.prior_m1 > 0.0 && self.prior_m1 < 1.0) {
            return Err(CliError::Config("prior-m1 must lie strictly between 0 and 1".into()));
        }
        if let Some(p) = &self.effect_point {
            if p.len() != self.x_columns.len() {
                return Err(CliError::Config("effect-point must have one coordinate per predictor column".into()));
            }
        }
        if self.mc_samples == 0 || self.profile_count < 2 || self.curve_points < 2 {
            return Err(CliError::Config("mc-samples must be positive; profile-count and curve-points at least 2".into()));
        }
        Ok(())
    }
}

/// Settings for one `simulate` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_latents")]
    pub latents: Vec<String>,
    #[serde(default = "default_d_values")]
    pub d_values: Vec<f64>,
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_kernels")]
    pub kernels: Vec<KernelEntry>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    pub rmse_samples: Option<usize>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_output_csv")]
    pub output_csv: PathBuf,
    #[serde(default = "default_output_json")]
    pub output_json: PathBuf,
}

fn default_latents() -> Vec<String> {
    vec!["linear".into()]
}
fn default_d_values() -> Vec<f64> {
    bnqd::sim::default_d_grid()
}
fn default_sigmas() -> Vec<f64> {
    vec![1.0]
}
fn default_n() -> usize {
    100
}
fn default_repetitions() -> usize {
    100
}
fn default_output_csv() -> PathBuf {
    "simulation.csv".into()
}
fn default_output_json() -> PathBuf {
    "simulation.json".into()
}

impl Default for SimulateConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

impl SimulateConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg: Self = read_toml(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.output_csv = resolve(base, &cfg.output_csv);
        cfg.output_json = resolve(base, &cfg.output_json);
        Ok(cfg)
    }

    pub fn latent_functions(&self) -> Result<Vec<LatentFunction>> {
        Ok(self.latents.iter().map(|l| LatentFunction::parse(l)).collect::<bnqd::Result<_>>()?)
    }

    pub fn kernel_choices(&self) -> Result<Vec<KernelChoice>> {
        parse_kernels(&self.kernels)
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
