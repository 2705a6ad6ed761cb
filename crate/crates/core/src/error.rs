use thiserror::Error;

/// Errors raised by the modelling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed input such as mismatched dimensions or non-finite values.
    #[error("input error: {0}")]
    Input(String),
    /// An analysis was set up in a way that cannot be run.
    #[error("configuration error: {0}")]
    Config(String),
    /// Factorization or optimization broke down.
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("optimization error: {0}")]
    Optimization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
