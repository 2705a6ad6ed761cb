//! Model comparison between a continuous and a discontinuous GP regression.
//!
//! The continuous model M0 fits one GP to all observations. The
//! discontinuous model M1 fits independent GPs to the control side
//! (`ℓ = 0`) and the intervention side (`ℓ = 1`) with one shared set of
//! hyperparameters optimized on the sum of both log marginal likelihoods.
//! Evidences are BIC approximations, `log p(D | M) ≈ log ML(θ̂) − (k/2)·log n`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{Dataset, GPFit};
use crate::hyperopt::{default_init, optimize, OptConfig, OptResult};
use crate::kernels::{HyperVector, KernelFamily};
use crate::stats::{derive_seed, log_sum_exp, sigmoid, softmax};

/// Assignment rule: `true` puts a point on the intervention side.
#[derive(Clone)]
pub enum LabelFunction {
    /// `ℓ(x) = 1` iff `x[dim] ≥ x0`.
    Threshold { dim: usize, x0: f64 },
    Predicate(Arc<dyn Fn(&[f64]) -> bool + Send + Sync>),
}

impl fmt::Debug for LabelFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Threshold { dim, x0 } => write!(f, "Threshold {{ dim: {dim}, x0: {x0} }}"),
            Self::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

impl LabelFunction {
    pub fn threshold(x0: f64) -> Self {
        Self::Threshold { dim: 0, x0 }
    }

    pub fn predicate<F: Fn(&[f64]) -> bool + Send + Sync + 'static>(f: F) -> Self {
        Self::Predicate(Arc::new(f))
    }

    pub fn label(&self, x: &[f64]) -> bool {
        match self {
            Self::Threshold { dim, x0 } => x[*dim] >= *x0,
            Self::Predicate(f) => f(x),
        }
    }

    /// Indices of the control and intervention observations, in data order.
    pub fn split(&self, data: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
        if let Self::Threshold { dim, .. } = self {
            if *dim >= data.dim() {
                return Err(Error::Config(format!(
                    "threshold dimension {dim} out of range for {}-dimensional predictors",
                    data.dim()
                )));
            }
        }
        let (mut control, mut intervention) = (Vec::new(), Vec::new());
        for (i, x) in data.x.iter().enumerate() {
            if self.label(x) {
                intervention.push(i);
            } else {
                control.push(i);
            }
        }
        Ok((control, intervention))
    }

    /// Natural point at which to evaluate the effect size, if one exists.
    pub fn default_effect_point(&self, dim: usize) -> Option<Vec<f64>> {
        match self {
            Self::Threshold { dim: 0, x0 } if dim == 1 => Some(vec![*x0]),
            _ => None,
        }
    }
}

/// BIC-approximated log evidence of one model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub log_ml: f64,
    /// Number of hyperparameters, noise included.
    pub k: usize,
    pub n: usize,
    pub log_evidence: f64,
}

impl Evidence {
    pub fn bic(log_ml: f64, k: usize, n: usize) -> Self {
        Self { log_ml, k, n, log_evidence: log_ml - 0.5 * k as f64 * (n as f64).ln() }
    }
}

/// A kernel to include in an analysis, with optional starting values that
/// override the data-driven defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelChoice {
    pub family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengthscale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
}

impl From<KernelFamily> for KernelChoice {
    fn from(family: KernelFamily) -> Self {
        Self { family, variance: None, lengthscale: None, offset: None, noise: None }
    }
}

impl KernelChoice {
    pub fn init(&self, data: &Dataset) -> Result<HyperVector> {
        let base = default_init(self.family, data);
        let (kernel, noise) = base.to_model(self.family)?;
        let mut params = kernel.params();
        if let Some(v) = self.variance {
            params[0] = v;
        }
        match self.family {
            KernelFamily::Polynomial { .. } => {
                if let Some(o) = self.offset {
                    params[1] = o;
                }
            }
            _ => {
                if let Some(l) = self.lengthscale {
                    params[1] = l;
                }
            }
        }
        let kernel = self.family.with_params(params);
        kernel.validate()?;
        HyperVector::for_model(&kernel, self.noise.unwrap_or(noise))
    }
}

#[derive(Debug, Clone)]
pub struct ContinuousFit {
    pub fit: GPFit,
    pub evidence: Evidence,
    pub opt: OptResult,
}

#[derive(Debug, Clone)]
pub struct DiscontinuousFit {
    pub control: GPFit,
    pub intervention: GPFit,
    pub evidence: Evidence,
    pub opt: OptResult,
}

fn log_ml_or_neg_inf(data: &Dataset, family: KernelFamily, h: &HyperVector, mean: f64) -> f64 {
    match h.to_model(family).and_then(|(k, noise)| GPFit::with_mean(data.clone(), k, noise, mean)) {
        Ok(fit) => fit.log_marginal_likelihood(),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Fits M0: one GP over all observations, constant mean = mean of all `y`.
pub fn fit_continuous(data: &Dataset, choice: &KernelChoice, opt: &OptConfig) -> Result<ContinuousFit> {
    if data.len() < 2 {
        return Err(Error::Input("at least two observations are required".into()));
    }
    let mean = data.mean_y();
    let init = choice.init(data)?;
    let res = optimize(|h| log_ml_or_neg_inf(data, choice.family, h, mean), &init, opt)?;
    let (kernel, noise) = res.theta_hat.to_model(choice.family)?;
    let fit = GPFit::with_mean(data.clone(), kernel, noise, mean)?;
    let evidence = Evidence::bic(res.objective_value, res.theta_hat.len(), data.len());
    Ok(ContinuousFit { fit, evidence, opt: res })
}

/// Fits M1: separate GPs on each side of the label function with shared
/// hyperparameters. The constant mean is the mean of all `y` on both sides.
pub fn fit_discontinuous(
    data: &Dataset,
    label: &LabelFunction,
    choice: &KernelChoice,
    opt: &OptConfig,
) -> Result<DiscontinuousFit> {
    let (ci, ii) = label.split(data)?;
    if ci.is_empty() {
        return Err(Error::Config("empty side: the control side (label 0) has no observations".into()));
    }
    if ii.is_empty() {
        return Err(Error::Config(
            "empty side: the intervention side (label 1) has no observations".into(),
        ));
    }
    let control = data.select(&ci);
    let intervention = data.select(&ii);
    let mean = data.mean_y();
    let init = choice.init(data)?;
    let objective = |h: &HyperVector| {
        log_ml_or_neg_inf(&control, choice.family, h, mean)
            + log_ml_or_neg_inf(&intervention, choice.family, h, mean)
    };
    let res = optimize(objective, &init, opt)?;
    let (kernel, noise) = res.theta_hat.to_model(choice.family)?;
    let control = GPFit::with_mean(control, kernel, noise, mean)?;
    let intervention = GPFit::with_mean(intervention, kernel, noise, mean)?;
    let evidence = Evidence::bic(res.objective_value, res.theta_hat.len(), data.len());
    Ok(DiscontinuousFit { control, intervention, evidence, opt: res })
}

/// Gaussian effect posterior under M1, `N(f_I(x0) − f_C(x0), V[f_I(x0)] + V[f_C(x0)])`.
pub fn effect_size(control: &GPFit, intervention: &GPFit, x0: &[f64]) -> Result<(f64, f64)> {
    if control.kernel.family != intervention.kernel.family {
        return Err(Error::Input("effect size requires fits with the same kernel family".into()));
    }
    let (mc, vc) = control.predict_point(x0)?;
    let (mi, vi) = intervention.predict_point(x0)?;
    Ok((mi - mc, vi + vc))
}

/// Effect posterior for one kernel: Gaussian under M1 mixed with a spike at zero under M0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectPosterior {
    pub m1_mean: f64,
    pub m1_var: f64,
    /// `p(M0 | D)`.
    pub spike_weight: f64,
    /// `p(M1 | D)`.
    pub gaussian_weight: f64,
}

impl EffectPosterior {
    pub fn new(m1_mean: f64, m1_var: f64, p_m1: f64) -> Self {
        Self { m1_mean, m1_var, spike_weight: 1.0 - p_m1, gaussian_weight: p_m1 }
    }

    pub fn bma_mean(&self) -> f64 {
        self.gaussian_weight * self.m1_mean
    }

    pub fn bma_var(&self) -> f64 {
        let m = self.bma_mean();
        self.gaussian_weight * (self.m1_var + self.m1_mean * self.m1_mean) - m * m
    }

    pub fn mixture(&self) -> EffectMixture {
        EffectMixture {
            spike_weight: self.spike_weight,
            components: vec![GaussianComponent {
                weight: self.gaussian_weight,
                mean: self.m1_mean,
                var: self.m1_var,
            }],
        }
    }

    /// The M1-conditioned Gaussian alone.
    pub fn gaussian(&self) -> EffectMixture {
        EffectMixture {
            spike_weight: 0.0,
            components: vec![GaussianComponent { weight: 1.0, mean: self.m1_mean, var: self.m1_var }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: f64,
    pub var: f64,
}

/// Point mass at zero plus a weighted set of Gaussians; weights sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectMixture {
    pub spike_weight: f64,
    pub components: Vec<GaussianComponent>,
}

impl EffectMixture {
    pub fn point_mass(at: f64) -> Self {
        Self { spike_weight: 0.0, components: vec![GaussianComponent { weight: 1.0, mean: at, var: 0.0 }] }
    }

    pub fn mean(&self) -> f64 {
        self.components.iter().map(|c| c.weight * c.mean).sum()
    }

    pub fn var(&self) -> f64 {
        let m = self.mean();
        self.components.iter().map(|c| c.weight * (c.var + c.mean * c.mean)).sum::<f64>() - m * m
    }

    /// Root of `E[(d − true_d)²]` in closed form.
    pub fn rmse_exact(&self, true_d: f64) -> f64 {
        let mse = self.spike_weight * true_d * true_d
            + self
                .components
                .iter()
                .map(|c| c.weight * (c.var + (c.mean - true_d).powi(2)))
                .sum::<f64>();
        mse.max(0.0).sqrt()
    }

    /// Seeded draws: pick the spike or a component by weight, then sample it.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let mut u: f64 = rng.random();
                if u < self.spike_weight {
                    return 0.0;
                }
                u -= self.spike_weight;
                let comp = self
                    .components
                    .iter()
                    .find(|c| {
                        if u < c.weight {
                            true
                        } else {
                            u -= c.weight;
                            false
                        }
                    })
                    .or(self.components.last());
                match comp {
                    Some(c) if c.var > 0.0 => {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        c.mean + c.var.sqrt() * z
                    }
                    Some(c) => c.mean,
                    None => 0.0,
                }
            })
            .collect()
    }

    /// Monte Carlo estimate of the RMSE against `true_d`.
    pub fn rmse_mc(&self, true_d: f64, count: usize, seed: u64) -> f64 {
        let samples = self.sample(count.max(1), seed);
        let mse = samples.iter().map(|s| (s - true_d).powi(2)).sum::<f64>() / samples.len() as f64;
        mse.sqrt()
    }
}

/// Settings for [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareConfig {
    pub opt: OptConfig,
    /// Where the effect size is read off; defaults to the threshold for 1-D data.
    pub effect_point: Option<Vec<f64>>,
    /// Prior probability of M1.
    pub prior_m1: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self { opt: OptConfig::default(), effect_point: None, prior_m1: 0.5 }
    }
}

/// Both models for one kernel.
#[derive(Debug, Clone)]
pub struct KernelComparison {
    pub family: KernelFamily,
    pub continuous: ContinuousFit,
    pub discontinuous: DiscontinuousFit,
    pub log_bf10: f64,
    pub p_m1: f64,
    pub effect: EffectPosterior,
}

/// Results aggregated over kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub log_bf10: f64,
    pub p_m1: f64,
    /// `p(k | D, M0)`, uniform kernel prior.
    pub weights_m0: Vec<f64>,
    /// `p(k | D, M1)`, uniform kernel prior.
    pub weights_m1: Vec<f64>,
    /// Effect mean and variance given M1, averaged over kernels.
    pub m1_mean: f64,
    pub m1_var: f64,
    pub bma: EffectMixture,
}

#[derive(Debug, Clone)]
pub struct ComparisonResult {
    pub effect_point: Vec<f64>,
    pub n_control: usize,
    pub n_intervention: usize,
    pub kernels: Vec<KernelComparison>,
    pub totals: Totals,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Posterior model probability from a log Bayes factor and prior `p(M1)`.
pub fn posterior_m1(log_bf10: f64, prior_m1: f64) -> f64 {
    if prior_m1 == 0.5 {
        sigmoid(log_bf10)
    } else {
        sigmoid(log_bf10 + logit(prior_m1))
    }
}

/// Combines per-kernel evidences and effects into totals.
///
/// `evidence` holds `(log p(D | k, M0), log p(D | k, M1))` per kernel and
/// `effects` the M1 Gaussian `(mean, var)` per kernel.
pub fn combine(evidence: &[(f64, f64)], effects: &[(f64, f64)], prior_m1: f64) -> Totals {
    let ev0: Vec<f64> = evidence.iter().map(|e| e.0).collect();
    let ev1: Vec<f64> = evidence.iter().map(|e| e.1).collect();
    let log_bf10 = log_sum_exp(&ev1) - log_sum_exp(&ev0);
    let p_m1 = posterior_m1(log_bf10, prior_m1);
    let weights_m0 = softmax(&ev0);
    let weights_m1 = softmax(&ev1);
    let m1_mean: f64 = weights_m1.iter().zip(effects).map(|(w, e)| w * e.0).sum();
    let m1_second: f64 = weights_m1.iter().zip(effects).map(|(w, e)| w * (e.1 + e.0 * e.0)).sum();
    let components = weights_m1
        .iter()
        .zip(effects)
        .map(|(w, e)| GaussianComponent { weight: p_m1 * w, mean: e.0, var: e.1 })
        .collect();
    Totals {
        log_bf10,
        p_m1,
        weights_m0,
        weights_m1,
        m1_mean,
        m1_var: (m1_second - m1_mean * m1_mean).max(0.0),
        bma: EffectMixture { spike_weight: 1.0 - p_m1, components },
    }
}

/// Runs M0 and M1 for every kernel and assembles Bayes factors and effect posteriors.
pub fn compare(
    data: &Dataset,
    label: &LabelFunction,
    kernels: &[KernelChoice],
    config: &CompareConfig,
) -> Result<ComparisonResult> {
    if kernels.is_empty() {
        return Err(Error::Config("at least one kernel is required".into()));
    }
    if !(config.prior_m1 > 0.0 && config.prior_m1 < 1.0) {
        return Err(Error::Config(format!("prior_m1 must lie in (0, 1), got {}", config.prior_m1)));
    }
    let (ci, ii) = label.split(data)?;
    if ci.is_empty() || ii.is_empty() {
        let side = if ci.is_empty() { "control (label 0)" } else { "intervention (label 1)" };
        return Err(Error::Config(format!("empty side: the {side} side has no observations")));
    }
    let effect_point = match &config.effect_point {
        Some(p) => p.clone(),
        None => label.default_effect_point(data.dim()).ok_or_else(|| {
            Error::Config("an effect evaluation point is required for this label function".into())
        })?,
    };
    if effect_point.len() != data.dim() {
        return Err(Error::Config(format!(
            "effect point has dimension {}, data has {}",
            effect_point.len(),
            data.dim()
        )));
    }

    let per_kernel: Vec<Result<KernelComparison>> = kernels
        .par_iter()
        .enumerate()
        .map(|(i, choice)| {
            let opt0 = OptConfig { seed: derive_seed(config.opt.seed, &[i as u64, 0]), ..config.opt };
            let opt1 = OptConfig { seed: derive_seed(config.opt.seed, &[i as u64, 1]), ..config.opt };
            let (continuous, discontinuous) = rayon::join(
                || fit_continuous(data, choice, &opt0),
                || fit_discontinuous(data, label, choice, &opt1),
            );
            let (continuous, discontinuous) = (continuous?, discontinuous?);
            let log_bf10 = discontinuous.evidence.log_evidence - continuous.evidence.log_evidence;
            let p_m1 = posterior_m1(log_bf10, config.prior_m1);
            let (mean, var) = effect_size(&discontinuous.control, &discontinuous.intervention, &effect_point)?;
            Ok(KernelComparison {
                family: choice.family,
                continuous,
                discontinuous,
                log_bf10,
                p_m1,
                effect: EffectPosterior::new(mean, var, p_m1),
            })
        })
        .collect();
    let kernels = per_kernel.into_iter().collect::<Result<Vec<_>>>()?;

    let evidence: Vec<(f64, f64)> = kernels
        .iter()
        .map(|k| (k.continuous.evidence.log_evidence, k.discontinuous.evidence.log_evidence))
        .collect();
    let effects: Vec<(f64, f64)> = kernels.iter().map(|k| (k.effect.m1_mean, k.effect.m1_var)).collect();
    let totals = combine(&evidence, &effects, config.prior_m1);
    Ok(ComparisonResult {
        effect_point,
        n_control: ci.len(),
        n_intervention: ii.len(),
        kernels,
        totals,
    })
}

/// Seeded draws from the kernel- and model-averaged effect posterior.
pub fn bma_effect_samples(result: &ComparisonResult, count: usize, seed: u64) -> Vec<f64> {
    result.totals.bma.sample(count, seed)
}
