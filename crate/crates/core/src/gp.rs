//! Exact Gaussian-process regression with Gaussian noise and a constant mean.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelSpec, Points};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Relative jitter tried first when `K + σ²I` is not numerically positive definite.
const JITTER_START: f64 = 1e-6;
const JITTER_MAX: f64 = 1e-2;

/// Observations `(x_i, y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Points,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Points, y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Input("dataset is empty".into()));
        }
        if x.len() != y.len() {
            return Err(Error::Input(format!(
                "{} predictor rows but {} responses",
                x.len(),
                y.len()
            )));
        }
        if let Some(i) = x.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite predictor at row {}", i / x.dim())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite response at row {i}")));
        }
        Ok(Self { x, y })
    }

    /// One-dimensional dataset.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(Points::from_scalars(x), y.to_vec())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn mean_y(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }

    /// Population variance of the responses.
    pub fn var_y(&self) -> f64 {
        let m = self.mean_y();
        self.y.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.y.len() as f64
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

/// A GP conditioned on training data, with the factorization cached.
#[derive(Debug, Clone)]
pub struct GPFit {
    pub kernel: KernelSpec,
    /// Constant mean function value `c`.
    pub mean: f64,
    /// Observation-noise variance σ_n².
    pub noise: f64,
    pub data: Dataset,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

/// Latent posterior at each query point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictivePosterior {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Factorizes `K + noise·I`, escalating jitter if needed. Returns the factor
/// and the absolute jitter added to the diagonal.
pub(crate) fn factorize(mut k: DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = k.nrows();
    for i in 0..n {
        k[(i, i)] += noise;
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("covariance matrix has non-finite entries".into()));
    }
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok((chol, 0.0));
    }
    let scale = k.diagonal().mean().abs().max(f64::MIN_POSITIVE);
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-12) {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += rel * scale;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok((chol, rel * scale));
        }
        rel *= 2.0;
    }
    Err(Error::Numerical(format!(
        "Cholesky factorization failed for {n}x{n} covariance even with jitter {:.1e}",
        JITTER_MAX
    )))
}

impl GPFit {
    /// Fits with the empirical mean of `data.y` as the constant mean.
    pub fn new(data: Dataset, kernel: KernelSpec, noise: f64) -> Result<Self> {
        let mean = data.mean_y();
        Self::with_mean(data, kernel, noise, mean)
    }

    /// Fits with an externally supplied constant mean.
    pub fn with_mean(data: Dataset, kernel: KernelSpec, noise: f64, mean: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise > 0.0 && noise.is_finite()) {
            return Err(Error::Input(format!("noise variance must be positive, got {noise}")));
        }
        if data.is_empty() {
            return Err(Error::Input("cannot fit an empty dataset".into()));
        }
        let (chol, jitter) = factorize(kernel.gram(&data.x), noise)?;
        let resid = DVector::from_iterator(data.len(), data.y.iter().map(|v| v - mean));
        let alpha = chol.solve(&resid);
        Ok(Self { kernel, mean, noise, data, chol, alpha, jitter })
    }

    /// Lower-triangular factor `L` with `L·Lᵀ = K + σ_n²I` (plus any jitter).
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `(K + σ_n²I)⁻¹ (y − c)`.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Absolute diagonal jitter that was needed, zero in the common case.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.data.len() as f64;
        let fit_term: f64 = self
            .data
            .y
            .iter()
            .zip(self.alpha.iter())
            .map(|(y, a)| (y - self.mean) * a)
            .sum();
        let half_logdet: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * fit_term - half_logdet - 0.5 * n * LN_2PI
    }

    /// Latent mean and variance at the query points (noise excluded).
    pub fn predict(&self, query: &Points) -> Result<PredictivePosterior> {
        let kx = self.kernel.cross(&self.data.x, query)?;
        let mean_vec = kx.tr_mul(&self.alpha);
        let mut v = kx;
        self.chol.l_dirty().solve_lower_triangular_mut(&mut v);
        let mut mean = Vec::with_capacity(query.len());
        let mut var = Vec::with_capacity(query.len());
        for (j, xs) in query.iter().enumerate() {
            mean.push(self.mean + mean_vec[j]);
            let col = v.column(j);
            let prior = self.kernel.eval_unchecked(xs, xs);
            var.push((prior - col.dot(&col)).max(0.0));
        }
        Ok(PredictivePosterior { mean, var })
    }

    pub fn predict_point(&self, x: &[f64]) -> Result<(f64, f64)> {
        let q = Points::new(x.len(), x.to_vec())?;
        let p = self.predict(&q)?;
        Ok((p.mean[0], p.var[0]))
    }
}
