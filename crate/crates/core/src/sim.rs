//! Simulation study: synthetic regression-discontinuity data from known
//! latent functions, analysed repeatedly to measure effect recovery and
//! Bayes-factor behaviour.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::Dataset;
use crate::inference::{compare, CompareConfig, EffectMixture, KernelChoice, LabelFunction};
use crate::kernels::{KernelFamily, Points};
use crate::stats::{derive_seed, mean_stderr};

/// Latent regression functions on `[−1, 1]`, split at `x0 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LatentFunction {
    Linear,
    Quad,
    Cubic,
    Lee,
    Cate1,
    Cate2,
    Ludwig,
    Curvature,
    Sine,
}

fn poly(c: &[f64; 6], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

impl LatentFunction {
    pub const ALL: [LatentFunction; 9] = [
        Self::Linear,
        Self::Quad,
        Self::Cubic,
        Self::Lee,
        Self::Cate1,
        Self::Cate2,
        Self::Ludwig,
        Self::Curvature,
        Self::Sine,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Linear => "linear",
            Self::Quad => "quad",
            Self::Cubic => "cubic",
            Self::Lee => "lee",
            Self::Cate1 => "cate1",
            Self::Cate2 => "cate2",
            Self::Ludwig => "ludwig",
            Self::Curvature => "curvature",
            Self::Sine => "sine",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        Self::ALL.iter().copied().find(|f| f.name() == lower).ok_or_else(|| {
            let valid: Vec<&str> = Self::ALL.iter().map(|f| f.name()).collect();
            Error::Config(format!("unknown latent function '{name}'; valid names: {}", valid.join(", ")))
        })
    }

    /// Value at `x`; piecewise functions take their first branch for `x < 0`.
    pub fn eval(&self, x: f64) -> f64 {
        let left = x < 0.0;
        match self {
            Self::Linear => 0.23 + 0.89 * x,
            Self::Quad => {
                if left {
                    3.0 * x * x
                } else {
                    4.0 * x * x
                }
            }
            Self::Cubic => {
                if left {
                    3.0 * x.powi(3)
                } else {
                    4.0 * x.powi(3)
                }
            }
            Self::Lee => {
                if left {
                    poly(&[0.48, 1.27, 7.18, 20.21, 21.54, 7.33], x)
                } else {
                    poly(&[0.48, 0.84, -3.0, 7.99, -9.01, 3.56], x)
                }
            }
            Self::Cate1 => poly(&[0.42, 0.84, -3.0, 7.99, -9.01, 3.56], x),
            Self::Cate2 => poly(&[0.42, 0.84, 0.0, 7.99, -9.01, 3.56], x),
            Self::Ludwig => {
                if left {
                    poly(&[3.71, 2.3, 3.28, 1.45, 0.23, 0.03], x)
                } else {
                    poly(&[3.71, 18.49, -54.81, 74.3, -45.02, 9.83], x)
                }
            }
            Self::Curvature => {
                if left {
                    poly(&[0.48, 1.27, -3.44, 14.147, 23.694, 10.995], x)
                } else {
                    // printed with a decimal comma as "0,901"
                    poly(&[0.48, 0.84, -0.3, -2.397, -0.901, 3.56], x)
                }
            }
            Self::Sine => x.sin(),
        }
    }
}

/// One simulation setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub latent: LatentFunction,
    pub n: usize,
    /// Injected discontinuity at `x0`.
    pub d: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub x0: f64,
    pub seed: u64,
    pub repetitions: usize,
    pub kernels: Vec<KernelChoice>,
    pub compare: CompareConfig,
    /// Monte Carlo draws per RMSE; `None` uses the closed form.
    pub rmse_samples: Option<usize>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            latent: LatentFunction::Linear,
            n: 100,
            d: 1.0,
            sigma: 1.0,
            x0: 0.0,
            seed: 0,
            repetitions: 100,
            kernels: [
                KernelFamily::LINEAR,
                KernelFamily::Exponential,
                KernelFamily::Matern32,
                KernelFamily::SquaredExponential,
            ]
            .into_iter()
            .map(KernelChoice::from)
            .collect(),
            compare: CompareConfig::default(),
            rmse_samples: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(Error::Config(format!("n must be at least 10, got {}", self.n)));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be at least 1".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !self.d.is_finite() || !self.x0.is_finite() {
            return Err(Error::Config("d and x0 must be finite".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::Config("at least one kernel is required".into()));
        }
        Ok(())
    }
}

/// Draws `x ~ U(−1, 1)` and `y ~ N(f(x) + d·[x ≥ x0], σ²)` from `config.seed`.
pub fn generate(config: &SimConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut xs = Vec::with_capacity(config.n);
    let mut ys = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let x: f64 = rng.random_range(-1.0..1.0);
        let z: f64 = StandardNormal.sample(&mut rng);
        let jump = if x >= config.x0 { config.d } else { 0.0 };
        xs.push(x);
        ys.push(config.latent.eval(x) + jump + config.sigma * z);
    }
    Dataset::new(Points::from_scalars(&xs), ys).expect("generated data is finite")
}

/// Metrics of one kernel (or the kernel average) in one repetition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepMetrics {
    pub m1_mean: f64,
    pub bma_mean: f64,
    pub rmse_m1: f64,
    pub rmse_bma: f64,
    pub log_bf10: f64,
}

impl RepMetrics {
    pub const NAMES: [&'static str; 5] = ["m1_mean", "bma_mean", "rmse_m1", "rmse_bma", "log_bf10"];

    fn values(&self) -> [f64; 5] {
        [self.m1_mean, self.bma_mean, self.rmse_m1, self.rmse_bma, self.log_bf10]
    }
}

/// RMSE of an effect posterior against the true effect.
pub fn rmse(posterior: &EffectMixture, true_d: f64, samples: Option<usize>, seed: u64) -> f64 {
    match samples {
        Some(count) => posterior.rmse_mc(true_d, count, seed),
        None => posterior.rmse_exact(true_d),
    }
}

/// Per-kernel metrics followed by the kernel-averaged metrics for one dataset.
pub fn run_once(config: &SimConfig) -> Result<Vec<RepMetrics>> {
    let data = generate(config);
    let label = LabelFunction::threshold(config.x0);
    let mut cmp = config.compare.clone();
    cmp.opt.seed = derive_seed(config.seed, &[u64::MAX]);
    let result = compare(&data, &label, &config.kernels, &cmp)?;
    let mc_seed = derive_seed(config.seed, &[u64::MAX - 1]);
    let mut out: Vec<RepMetrics> = result
        .kernels
        .iter()
        .map(|k| RepMetrics {
            m1_mean: k.effect.m1_mean,
            bma_mean: k.effect.bma_mean(),
            rmse_m1: rmse(&k.effect.gaussian(), config.d, config.rmse_samples, mc_seed),
            rmse_bma: rmse(&k.effect.mixture(), config.d, config.rmse_samples, mc_seed),
            log_bf10: k.log_bf10,
        })
        .collect();
    let t = &result.totals;
    let m1_total = EffectMixture {
        spike_weight: 0.0,
        components: t
            .bma
            .components
            .iter()
            .zip(&t.weights_m1)
            .map(|(c, w)| crate::inference::GaussianComponent { weight: *w, ..*c })
            .collect(),
    };
    out.push(RepMetrics {
        m1_mean: t.m1_mean,
        bma_mean: t.bma.mean(),
        rmse_m1: rmse(&m1_total, config.d, config.rmse_samples, mc_seed),
        rmse_bma: rmse(&t.bma, config.d, config.rmse_samples, mc_seed),
        log_bf10: t.log_bf10,
    });
    Ok(out)
}

/// Aggregate of one metric over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub latent: String,
    pub d: f64,
    pub sigma: f64,
    /// Kernel name, or `total` for the kernel average.
    pub kernel: String,
    pub metric: String,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub latent: String,
    pub d: f64,
    pub sigma: f64,
    pub repetition: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub repetitions: usize,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<CellFailure>,
}

impl SimSummary {
    pub fn get(&self, latent: LatentFunction, d: f64, kernel: &str, metric: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.latent == latent.name() && r.d == d && r.kernel == kernel && r.metric == metric)
    }
}

/// Runs `template.repetitions` analyses for every `(latent, d, sigma)` cell.
///
/// Repetition seeds derive from `(template.seed, cell index, repetition)`.
/// Failed repetitions are recorded and excluded from the aggregates.
pub fn run_grid(
    latents: &[LatentFunction],
    ds: &[f64],
    sigmas: &[f64],
    template: &SimConfig,
) -> Result<SimSummary> {
    if latents.is_empty() || ds.is_empty() || sigmas.is_empty() {
        return Err(Error::Config("simulation grids must be non-empty".into()));
    }
    template.validate()?;
    let mut cells = Vec::new();
    for &latent in latents {
        for &d in ds {
            for &sigma in sigmas {
                cells.push(SimConfig { latent, d, sigma, ..template.clone() });
            }
        }
    }
    for c in &cells {
        c.validate()?;
    }
    let reps = template.repetitions;
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<Vec<RepMetrics>>> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let cfg = SimConfig { seed: derive_seed(template.seed, &[c as u64, r as u64]), ..cells[c].clone() };
            run_once(&cfg)
        })
        .collect();

    let kernel_names: Vec<String> = template
        .kernels
        .iter()
        .map(|k| k.family.name())
        .chain(std::iter::once("total".to_string()))
        .collect();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (c, cell) in cells.iter().enumerate() {
        let mut ok: Vec<&Vec<RepMetrics>> = Vec::new();
        for r in 0..reps {
            match &outcomes[c * reps + r] {
                Ok(m) => ok.push(m),
                Err(e) => failures.push(CellFailure {
                    latent: cell.latent.name().into(),
                    d: cell.d,
                    sigma: cell.sigma,
                    repetition: r,
                    error: e.to_string(),
                }),
            }
        }
        for (ki, kname) in kernel_names.iter().enumerate() {
            for (mi, metric) in RepMetrics::NAMES.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|m| m[ki].values()[mi]).collect();
                let (mean, stderr) = mean_stderr(&values);
                rows.push(SummaryRow {
                    latent: cell.latent.name().into(),
                    d: cell.d,
                    sigma: cell.sigma,
                    kernel: kname.clone(),
                    metric: (*metric).into(),
                    mean,
                    stderr,
                    count: values.len(),
                });
            }
        }
    }
    Ok(SimSummary { repetitions: reps, n: template.n, seed: template.seed, rows, failures })
}

/// The default effect grid `{2⁻², 2⁻¹, 1, 2, 4}`.
pub fn default_d_grid() -> Vec<f64> {
    (-2..=2).map(|e| 2f64.powi(e)).collect()
}
