//! Command-line runner for tunnelling time scenarios.
//!
//! The `tunneltime` binary wraps four commands:
//!
//! * `single`: tunnelling, reflection, dwell and phase times for one scenario;
//! * `profile`: penetration and return times across the barrier;
//! * `figures`: the profile sweeps behind the published figures;
//! * `check`: the invariant suite on a small lattice.
//!
//! Each is also callable from here, returning tables rather than files.

pub mod check;
pub mod commands;
pub mod config;
pub mod lattice;
pub mod table;

use std::path::PathBuf;

pub use config::{ConfigError, RawConfig, RunConfig, ScenarioConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("refinement did not converge: {0}")]
    NotConverged(String),
    #[error("{0} invariant check(s) failed")]
    InvariantFailure(usize),
    #[error(transparent)]
    Core(#[from] tunneltime::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(tunneltime::Error::Config(_)) => 2,
            CliError::NotConverged(_) => 3,
            CliError::InvariantFailure(_) => 4,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}
