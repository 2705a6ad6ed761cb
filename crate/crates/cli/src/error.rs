use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical error: {0}")]
    Numerical(String),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Data(_) => 3,
            Self::Numerical(_) => 4,
        }
    }
}

impl From<bnqd::Error> for CliError {
    fn from(e: bnqd::Error) -> Self {
        match e {
            bnqd::Error::Config(m) => Self::Config(m),
            bnqd::Error::Input(m) => Self::Data(m),
            bnqd::Error::Numerical(m) | bnqd::Error::Optimization(m) => Self::Numerical(m),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
