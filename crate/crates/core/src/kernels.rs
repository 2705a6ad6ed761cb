//! Closed-form covariance functions.
//!
//! The stationary kernels are written in terms of the Euclidean distance
//! `r = ‖x − x'‖` and keep the plain lengthscale denominators:
//!
//! ```text
//! Exponential      σ²·exp(−r/l)
//! Matérn (ν=3/2)   σ²·(1 + √3·r/l)·exp(−√3·r/l)
//! SE               σ²·exp(−r²/l)
//! Polynomial       (σ²·⟨x, x'⟩ + γ)^k
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Covariance family without hyperparameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Polynomial { degree: u32 },
    Exponential,
    Matern32,
    SquaredExponential,
}

impl KernelFamily {
    pub const LINEAR: KernelFamily = KernelFamily::Polynomial { degree: 1 };

    /// Parses the config names `linear`, `polyN`, `exp`, `matern32` and `se`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "linear" => Ok(Self::LINEAR),
            "exp" | "exponential" => Ok(Self::Exponential),
            "matern32" | "matern" => Ok(Self::Matern32),
            "se" | "rbf" | "squared_exponential" => Ok(Self::SquaredExponential),
            other => {
                if let Some(deg) = other.strip_prefix("poly") {
                    let degree: u32 = deg.parse().map_err(|_| {
                        Error::Config(format!("invalid polynomial degree in kernel name '{name}'"))
                    })?;
                    if degree == 0 {
                        return Err(Error::Config("polynomial degree must be at least 1".into()));
                    }
                    return Ok(Self::Polynomial { degree });
                }
                Err(Error::Config(format!(
                    "unknown kernel '{name}' (expected one of: linear, polyN, exp, matern32, se)"
                )))
            }
        }
    }

    /// Short name, inverse of [`KernelFamily::parse`].
    pub fn name(&self) -> String {
        match self {
            Self::Polynomial { degree: 1 } => "linear".into(),
            Self::Polynomial { degree } => format!("poly{degree}"),
            Self::Exponential => "exp".into(),
            Self::Matern32 => "matern32".into(),
            Self::SquaredExponential => "se".into(),
        }
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self, Self::Polynomial { .. })
    }

    /// Names of the free kernel hyperparameters, in [`KernelSpec::params`] order.
    pub fn param_names(&self) -> [&'static str; 2] {
        match self {
            Self::Polynomial { .. } => ["variance", "offset"],
            _ => ["variance", "lengthscale"],
        }
    }

    /// Builds a spec from `[variance, lengthscale_or_offset]`.
    pub fn with_params(&self, params: [f64; 2]) -> KernelSpec {
        let (variance, second) = (params[0], params[1]);
        match *self {
            Self::Polynomial { degree } => KernelSpec::polynomial(degree, variance, second),
            Self::Exponential => KernelSpec::exponential(variance, second),
            Self::Matern32 => KernelSpec::matern32(variance, second),
            Self::SquaredExponential => KernelSpec::squared_exponential(variance, second),
        }
    }
}

impl std::fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

/// A covariance family together with its hyperparameter values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// Output scale σ_v².
    pub variance: f64,
    /// Lengthscale `l`; unused by the polynomial family.
    pub lengthscale: f64,
    /// Offset γ; polynomial family only.
    pub offset: f64,
}

impl KernelSpec {
    pub fn polynomial(degree: u32, variance: f64, offset: f64) -> Self {
        Self { family: KernelFamily::Polynomial { degree }, variance, lengthscale: 0.0, offset }
    }

    pub fn linear(variance: f64, offset: f64) -> Self {
        Self::polynomial(1, variance, offset)
    }

    pub fn exponential(variance: f64, lengthscale: f64) -> Self {
        Self { family: KernelFamily::Exponential, variance, lengthscale, offset: 0.0 }
    }

    pub fn matern32(variance: f64, lengthscale: f64) -> Self {
        Self { family: KernelFamily::Matern32, variance, lengthscale, offset: 0.0 }
    }

    pub fn squared_exponential(variance: f64, lengthscale: f64) -> Self {
        Self { family: KernelFamily::SquaredExponential, variance, lengthscale, offset: 0.0 }
    }

    /// Free kernel hyperparameters in the order given by [`KernelFamily::param_names`].
    pub fn params(&self) -> [f64; 2] {
        match self.family {
            KernelFamily::Polynomial { .. } => [self.variance, self.offset],
            _ => [self.variance, self.lengthscale],
        }
    }

    /// Number of free kernel hyperparameters. The polynomial degree is
    /// structural and never counted.
    pub fn num_hyperparameters(&self) -> usize {
        self.params().len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::Input(format!("kernel variance must be positive, got {}", self.variance)));
        }
        match self.family {
            KernelFamily::Polynomial { degree } => {
                if degree == 0 {
                    return Err(Error::Input("polynomial degree must be at least 1".into()));
                }
                if !(self.offset > 0.0 && self.offset.is_finite()) {
                    return Err(Error::Input(format!("polynomial offset must be positive, got {}", self.offset)));
                }
            }
            _ => {
                if !(self.lengthscale > 0.0 && self.lengthscale.is_finite()) {
                    return Err(Error::Input(format!(
                        "lengthscale must be positive, got {}",
                        self.lengthscale
                    )));
                }
            }
        }
        Ok(())
    }

    /// Covariance between two points of equal dimension.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() || x.is_empty() {
            return Err(Error::Input(format!(
                "dimension mismatch: {} vs {}",
                x.len(),
                x2.len()
            )));
        }
        Ok(self.eval_unchecked(x, x2))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Polynomial { degree } => {
                let dot: f64 = x.iter().zip(x2).map(|(a, b)| a * b).sum();
                (self.variance * dot + self.offset).powi(degree as i32)
            }
            KernelFamily::Exponential => {
                let r = distance(x, x2);
                self.variance * (-r / self.lengthscale).exp()
            }
            KernelFamily::Matern32 => {
                let s = SQRT_3 * distance(x, x2) / self.lengthscale;
                self.variance * (1.0 + s) * (-s).exp()
            }
            KernelFamily::SquaredExponential => {
                let r2 = squared_distance(x, x2);
                self.variance * (-r2 / self.lengthscale).exp()
            }
        }
    }

    /// Covariance matrix of a point set with itself.
    pub fn gram(&self, points: &Points) -> DMatrix<f64> {
        let n = points.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            let xi = points.point(i);
            for j in 0..=i {
                let v = self.eval_unchecked(xi, points.point(j));
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Cross-covariance matrix with rows indexed by `a` and columns by `b`.
    pub fn cross(&self, a: &Points, b: &Points) -> Result<DMatrix<f64>> {
        if a.dim() != b.dim() {
            return Err(Error::Input(format!(
                "dimension mismatch: {} vs {}",
                a.dim(),
                b.dim()
            )));
        }
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| {
            self.eval_unchecked(a.point(i), b.point(j))
        }))
    }
}

fn squared_distance(x: &[f64], x2: &[f64]) -> f64 {
    x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn distance(x: &[f64], x2: &[f64]) -> f64 {
    squared_distance(x, x2).sqrt()
}

/// A set of points in `R^p`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Points {
    dim: usize,
    data: Vec<f64>,
}

impl Points {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("points must have dimension at least 1".into()));
        }
        if data.len() % dim != 0 {
            return Err(Error::Input(format!(
                "{} coordinates do not divide into points of dimension {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    /// One-dimensional points.
    pub fn from_scalars(xs: &[f64]) -> Self {
        Self { dim: 1, data: xs.to_vec() }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Input("rows have differing dimensions".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    /// Subset of the points at the given indices, in index order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, data }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Whether a hyperparameter must stay strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    Positive,
    Unconstrained,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyper {
    pub name: String,
    pub value: f64,
    pub constraint: Constraint,
}

/// Ordered hyperparameters of a model: the kernel's free parameters
/// followed by the observation-noise variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperVector {
    entries: Vec<Hyper>,
}

impl HyperVector {
    pub fn new(entries: Vec<Hyper>) -> Result<Self> {
        let v = Self { entries };
        v.validate()?;
        Ok(v)
    }

    /// Kernel parameters plus `noise` (σ_n²).
    pub fn for_model(kernel: &KernelSpec, noise: f64) -> Result<Self> {
        let mut entries: Vec<Hyper> = kernel
            .family
            .param_names()
            .iter()
            .zip(kernel.params())
            .map(|(name, value)| Hyper { name: (*name).into(), value, constraint: Constraint::Positive })
            .collect();
        entries.push(Hyper { name: "noise".into(), value: noise, constraint: Constraint::Positive });
        Self::new(entries)
    }

    pub fn validate(&self) -> Result<()> {
        for h in &self.entries {
            if !h.value.is_finite() {
                return Err(Error::Input(format!("hyperparameter '{}' is not finite", h.name)));
            }
            if h.constraint == Constraint::Positive && h.value <= 0.0 {
                return Err(Error::Input(format!(
                    "hyperparameter '{}' must be positive, got {}",
                    h.name, h.value
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Hyper] {
        &self.entries
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|h| h.value).collect()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|h| h.name == name).map(|h| h.value)
    }

    /// Interprets the vector as `(kernel of the given family, noise variance)`.
    pub fn to_model(&self, family: KernelFamily) -> Result<(KernelSpec, f64)> {
        if self.entries.len() != 3 {
            return Err(Error::Input(format!(
                "expected 3 model hyperparameters, got {}",
                self.entries.len()
            )));
        }
        let kernel = family.with_params([self.entries[0].value, self.entries[1].value]);
        kernel.validate()?;
        Ok((kernel, self.entries[2].value))
    }

    /// Coordinates in which the optimizer works: logarithms of positive entries.
    pub fn to_unconstrained(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|h| match h.constraint {
                Constraint::Positive => h.value.ln(),
                Constraint::Unconstrained => h.value,
            })
            .collect()
    }

    /// Inverse of [`HyperVector::to_unconstrained`], keeping names and constraints of `self`.
    pub fn with_unconstrained(&self, coords: &[f64]) -> Self {
        assert_eq!(coords.len(), self.entries.len());
        let entries = self
            .entries
            .iter()
            .zip(coords)
            .map(|(h, &u)| Hyper {
                name: h.name.clone(),
                value: match h.constraint {
                    Constraint::Positive => u.exp(),
                    Constraint::Unconstrained => u,
                },
                constraint: h.constraint,
            })
            .collect();
        Self { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_families() -> Vec<KernelSpec> {
        vec![
            KernelSpec::linear(0.7, 0.3),
            KernelSpec::polynomial(3, 0.5, 1.2),
            KernelSpec::exponential(1.3, 0.8),
            KernelSpec::matern32(0.9, 1.7),
            KernelSpec::squared_exponential(2.0, 0.4),
        ]
    }

    #[test]
    fn se_values() {
        let k = KernelSpec::squared_exponential(1.0, 1.0);
        assert_eq!(k.eval(&[0.0], &[0.0]).unwrap(), 1.0);
        assert!((k.eval(&[0.0], &[1.0]).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn linear_value() {
        let k = KernelSpec::linear(2.0, 0.5);
        assert_eq!(k.eval(&[1.0], &[3.0]).unwrap(), 6.5);
    }

    #[test]
    fn matern_at_zero_distance() {
        let k = KernelSpec::matern32(1.0, 1.0);
        assert_eq!(k.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch() {
        let k = KernelSpec::exponential(1.0, 1.0);
        assert!(matches!(k.eval(&[0.0], &[0.0, 1.0]), Err(Error::Input(_))));
        let a = Points::from_scalars(&[0.0]);
        let b = Points::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(k.cross(&a, &b).is_err());
    }

    #[test]
    fn gram_small_cases() {
        let k = KernelSpec::squared_exponential(1.0, 1.0);
        let one = k.gram(&Points::from_scalars(&[0.4]));
        assert_eq!(one[(0, 0)], 1.0);
        let g = k.gram(&Points::from_scalars(&[0.0, 1.0]));
        let e = (-1.0f64).exp();
        assert_eq!(g[(0, 0)], 1.0);
        assert_eq!(g[(1, 1)], 1.0);
        assert!((g[(0, 1)] - e).abs() < 1e-15);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
    }

    #[test]
    fn cross_matches_gram_on_same_points() {
        let pts = Points::from_scalars(&[-1.0, 0.2, 0.9, 2.5]);
        for k in all_families() {
            assert_eq!(k.cross(&pts, &pts).unwrap(), k.gram(&pts));
        }
        let k = KernelSpec::squared_exponential(1.0, 1.0);
        let c = k.cross(&Points::from_scalars(&[0.0]), &Points::from_scalars(&[1.0])).unwrap();
        assert_eq!(c.shape(), (1, 1));
        assert!((c[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn stationary_diagonal_is_variance() {
        let pts = Points::from_rows(&[vec![0.0, 1.0], vec![3.0, -2.0], vec![0.5, 0.5]]).unwrap();
        for k in all_families().into_iter().filter(|k| k.family.is_stationary()) {
            let g = k.gram(&pts);
            for i in 0..3 {
                assert_eq!(g[(i, i)], k.variance);
            }
        }
    }

    #[test]
    fn hyperparameter_counts() {
        assert_eq!(KernelSpec::squared_exponential(1.0, 1.0).num_hyperparameters(), 2);
        assert_eq!(KernelSpec::linear(1.0, 1.0).num_hyperparameters(), 2);
        assert_eq!(KernelSpec::matern32(1.0, 1.0).num_hyperparameters(), 2);
    }

    #[test]
    fn long_lengthscale_approaches_constant() {
        for k in [
            KernelSpec::exponential(1.5, 1e6),
            KernelSpec::matern32(1.5, 1e6),
            KernelSpec::squared_exponential(1.5, 1e6),
        ] {
            let v = k.eval(&[0.0], &[1.0]).unwrap();
            assert!((v - 1.5).abs() < 1e-4 * 1.5, "{:?}: {v}", k.family);
        }
    }

    #[test]
    fn parse_names() {
        assert_eq!(KernelFamily::parse("linear").unwrap(), KernelFamily::LINEAR);
        assert_eq!(KernelFamily::parse("poly3").unwrap(), KernelFamily::Polynomial { degree: 3 });
        assert_eq!(KernelFamily::parse("EXP").unwrap(), KernelFamily::Exponential);
        assert_eq!(KernelFamily::parse("matern32").unwrap(), KernelFamily::Matern32);
        assert_eq!(KernelFamily::parse("se").unwrap(), KernelFamily::SquaredExponential);
        assert!(KernelFamily::parse("poly0").is_err());
        assert!(KernelFamily::parse("periodic").is_err());
        for f in [KernelFamily::LINEAR, KernelFamily::Exponential, KernelFamily::Matern32] {
            assert_eq!(KernelFamily::parse(&f.name()).unwrap(), f);
        }
    }

    #[test]
    fn hyper_vector_layout() {
        let hv = HyperVector::for_model(&KernelSpec::matern32(2.0, 0.5), 0.1).unwrap();
        assert_eq!(hv.len(), 3);
        assert_eq!(hv.get("lengthscale"), Some(0.5));
        let (k, noise) = hv.to_model(KernelFamily::Matern32).unwrap();
        assert_eq!(k, KernelSpec::matern32(2.0, 0.5));
        assert_eq!(noise, 0.1);
        let back = hv.with_unconstrained(&hv.to_unconstrained());
        for (a, b) in back.values().iter().zip(hv.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(HyperVector::for_model(&KernelSpec::matern32(2.0, 0.5), 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(KernelSpec::exponential(0.0, 1.0).validate().is_err());
        assert!(KernelSpec::exponential(1.0, -1.0).validate().is_err());
        assert!(KernelSpec::linear(1.0, 0.0).validate().is_err());
        assert!(KernelSpec::linear(1.0, 0.1).validate().is_ok());
    }
}
