use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] erpm::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{}: {message}", path.display())]
    Data { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("estimation did not converge (max |convergence ratio| = {0:.3})")]
    NotConverged(f64),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NON_CONVERGENCE: i32 = 2;
pub const EXIT_DEGENERACY: i32 = 3;

impl CliError {
    pub fn data(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Data {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use erpm::Error as E;
        match self {
            CliError::NotConverged(_) => EXIT_NON_CONVERGENCE,
            CliError::Model(E::NewtonNoConvergence(_) | E::BridgeOverlap { .. }) => EXIT_NON_CONVERGENCE,
            CliError::Model(E::Divergence { .. } | E::DegenerateStatistic(_) | E::MleAtInfinity(_)) => {
                EXIT_DEGENERACY
            }
            _ => EXIT_VALIDATION,
        }
    }
}
