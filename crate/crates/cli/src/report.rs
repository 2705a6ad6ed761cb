//! Machine-readable analysis and simulation reports.

use std::collections::BTreeMap;

use bnqd::geo::ProfilePoint;
use bnqd::inference::{ContinuousFit, DiscontinuousFit, KernelComparison};
use bnqd::sim::SimSummary;
use bnqd::{ComparisonResult, Evidence, OptResult};
use serde::{Deserialize, Serialize};

use crate::config::{AnalyzeConfig, SimulateConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub log_ml: f64,
    pub log_evidence: f64,
    /// Number of hyperparameters in the BIC penalty.
    pub k: usize,
    pub n: usize,
    /// Constant prior mean.
    pub mean: f64,
    pub hyperparameters: BTreeMap<String, f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl ModelReport {
    fn new(evidence: &Evidence, mean: f64, opt: &OptResult) -> Self {
        Self {
            log_ml: evidence.log_ml,
            log_evidence: evidence.log_evidence,
            k: evidence.k,
            n: evidence.n,
            mean,
            hyperparameters: opt.theta_hat.entries().iter().map(|h| (h.name.clone(), h.value)).collect(),
            converged: opt.converged,
            iterations: opt.iterations,
        }
    }

    fn continuous(fit: &ContinuousFit) -> Self {
        Self::new(&fit.evidence, fit.fit.mean, &fit.opt)
    }

    fn discontinuous(fit: &DiscontinuousFit) -> Self {
        Self::new(&fit.evidence, fit.control.mean, &fit.opt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub kernel: String,
    pub continuous: ModelReport,
    pub discontinuous: ModelReport,
    pub log_bf10: f64,
    pub p_m1: f64,
    pub m1_mean: f64,
    pub m1_var: f64,
    pub bma_mean: f64,
    pub bma_var: f64,
}

impl From<&KernelComparison> for KernelReport {
    fn from(k: &KernelComparison) -> Self {
        Self {
            kernel: k.family.name(),
            continuous: ModelReport::continuous(&k.continuous),
            discontinuous: ModelReport::discontinuous(&k.discontinuous),
            log_bf10: k.log_bf10,
            p_m1: k.p_m1,
            m1_mean: k.effect.m1_mean,
            m1_var: k.effect.m1_var,
            bma_mean: k.effect.bma_mean(),
            bma_var: k.effect.bma_var(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelWeight {
    pub kernel: String,
    pub m0: f64,
    pub m1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalsReport {
    pub log_bf10: f64,
    pub p_m1: f64,
    pub kernel_weights: Vec<KernelWeight>,
    /// Kernel-averaged effect under M1.
    pub m1_mean: f64,
    pub m1_var: f64,
    pub bma_mean: f64,
    pub bma_var: f64,
    /// Posterior mass of the zero-effect spike.
    pub bma_spike_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub kernel: String,
    pub points: Vec<ProfilePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisProvenance {
    pub version: String,
    pub seed: u64,
    pub config: AnalyzeConfig,
    /// Seconds; the only field that differs between identical runs.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n: usize,
    pub n_control: usize,
    pub n_intervention: usize,
    pub effect_point: Vec<f64>,
    /// Observations within the on-path tolerance of a boundary.
    #[serde(default)]
    pub on_path_points: usize,
    pub kernels: Vec<KernelReport>,
    pub totals: TotalsReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<KernelProfile>>,
    pub provenance: AnalysisProvenance,
}

impl AnalysisReport {
    pub fn new(result: &ComparisonResult, config: &AnalyzeConfig) -> Self {
        let t = &result.totals;
        Self {
            n: result.n_control + result.n_intervention,
            n_control: result.n_control,
            n_intervention: result.n_intervention,
            effect_point: result.effect_point.clone(),
            on_path_points: 0,
            kernels: result.kernels.iter().map(KernelReport::from).collect(),
            totals: TotalsReport {
                log_bf10: t.log_bf10,
                p_m1: t.p_m1,
                kernel_weights: result
                    .kernels
                    .iter()
                    .zip(t.weights_m0.iter().zip(&t.weights_m1))
                    .map(|(k, (m0, m1))| KernelWeight { kernel: k.family.name(), m0: *m0, m1: *m1 })
                    .collect(),
                m1_mean: t.m1_mean,
                m1_var: t.m1_var,
                bma_mean: t.bma.mean(),
                bma_var: t.bma.var(),
                bma_spike_weight: t.bma.spike_weight,
            },
            profiles: None,
            provenance: AnalysisProvenance {
                version: VERSION.into(),
                seed: config.seed,
                config: config.clone(),
                wall_time: 0.0,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationProvenance {
    pub version: String,
    pub config: SimulateConfig,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub summary: SimSummary,
    pub provenance: SimulationProvenance,
}

/// One row per (latent, d, sigma, kernel, metric).
pub fn summary_csv(summary: &SimSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["latent", "d", "sigma", "kernel", "metric", "mean", "stderr", "count"]).expect("in-memory write");
    for r in &summary.rows {
        w.write_record([
            r.latent.clone(),
            r.d.to_string(),
            r.sigma.to_string(),
            r.kernel.clone(),
            r.metric.clone(),
            r.mean.to_string(),
            r.stderr.to_string(),
            r.count.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}
