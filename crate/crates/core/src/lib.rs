//! Bayesian non-parametric quasi-experimental design.
//!
//! A continuous model (one GP over all observations) is compared against a
//! discontinuous model (independent GPs on either side of an assignment
//! threshold, sharing hyperparameters) through BIC-approximated evidences.
//! The resulting Bayes factor weights a spike-and-Gaussian posterior over the
//! effect size at the threshold, and evidences are averaged across kernels.

pub mod error;
pub mod geo;
pub mod gp;
pub mod hyperopt;
pub mod inference;
pub mod kernels;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use gp::{Dataset, GPFit, PredictivePosterior};
pub use hyperopt::{OptConfig, OptResult, PriorSpec};
pub use inference::{
    compare, ComparisonResult, CompareConfig, EffectMixture, EffectPosterior, Evidence, KernelChoice,
    LabelFunction,
};

pub use kernels::{Constraint, HyperVector, KernelFamily, KernelSpec, Points};
