//! Batch front end for the eigenvalue particle system: configuration,
//! experiment commands, CSV artifacts and the acceptance suite.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io;

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

pub use commands::run_command;
pub use config::{Command, ExperimentSpec, FileConfig, Overrides, Sweep};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    RegimeMismatch(String),
    Numerical(String),
    AcceptanceFailed(Vec<String>),
    Io(io::Error),
    Core(eigenlab_core::Error),
}

impl CliError {
    /// Configuration-type core errors become [`CliError::Config`] so that
    /// they map to the configuration exit code.
    pub fn from_core(e: eigenlab_core::Error) -> Self {
        use eigenlab_core::Error as E;
        match e {
            E::InvalidParams(m) | E::InvalidConfig(m) => CliError::Config(m),
            E::RegimeMismatch(m) => CliError::RegimeMismatch(m),
            E::NumericalFailure { t } => {
                CliError::Numerical(format!("non-finite state at t = {t}"))
            }
            E::NumericOverflow(m) => CliError::Numerical(m),
            other => CliError::Core(other),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::RegimeMismatch(_) => 1,
            CliError::AcceptanceFailed(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::RegimeMismatch(m) => write!(f, "regime mismatch: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::AcceptanceFailed(ids) => {
                write!(f, "acceptance failed: {}", ids.join(", "))
            }
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

impl From<eigenlab_core::Error> for CliError {
    fn from(e: eigenlab_core::Error) -> Self {
        CliError::from_core(e)
    }
}
