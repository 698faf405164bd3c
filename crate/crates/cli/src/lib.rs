//! Batch front-end for `phgcalc`: run configuration, the reference corpus,
//! report files and the acceptance suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod accept;
pub mod commands;
pub mod config;
pub mod corpus;
pub mod model_checks;
pub mod report;

use std::path::PathBuf;

use phgcalc::heisenberg::HeisenbergError;
use phgcalc::phg::PhgError;
use phgcalc::symbol::SymbolError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("entry `{entry}`: {source}")]
    Parse { entry: String, source: SymbolError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error(transparent)]
    Phg(#[from] PhgError),
    #[error(transparent)]
    Heisenberg(#[from] HeisenbergError),
}

impl CliError {
    /// `1` for usage and configuration errors, `2` for failed computations.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Parse { .. } | CliError::Io { .. } => 1,
            CliError::Json(_) => 1,
            CliError::Heisenberg(HeisenbergError::NotAntisymmetric { .. } | HeisenbergError::InvalidModel(_)) => 1,
            CliError::Symbol(_) | CliError::Phg(_) | CliError::Heisenberg(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Verdict of a command and the files it wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}
