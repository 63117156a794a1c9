//! Config-driven experiment runner: exact diagonalization, VQE, sign-problem
//! indicators, walker Monte Carlo in the VQE basis, and depth sweeps.

pub mod commands;
pub mod config;
pub mod model;

use qcqmc_core::Error;

pub use commands::{
    cmd_ed, cmd_nsi, cmd_qmc, cmd_sweep, cmd_vqe, EdRecord, NsiRecord, QmcRecord, SweepRecord, SweepRow, VqeRecord,
};
pub use config::ExperimentConfig;
pub use model::{build_model, Model};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("model: {0}")]
    Model(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Model(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Other(_) => 1,
        }
    }

    /// A failure while building the model.
    pub(crate) fn model(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Model(e.to_string())
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            Error::Invalid(m) => CliError::Config(m),
            Error::CircuitFormat { .. } | Error::CacheFormat(_) => CliError::Config(e.to_string()),
            e => CliError::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}
