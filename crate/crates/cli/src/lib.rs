//! Command-line front end for discontinuity analyses: TOML configs, CSV
//! ingestion, JSON reports and plot-ready CSV exports.

pub mod analyze;
pub mod config;
pub mod data;
pub mod error;
pub mod output;
pub mod report;

pub use analyze::{analyze, simulate};
pub use config::{AnalyzeConfig, KernelEntry, SimulateConfig};
pub use error::{CliError, Result};
pub use report::{AnalysisReport, SimulationReport};
