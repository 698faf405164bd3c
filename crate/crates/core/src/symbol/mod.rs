//! Symbol expressions, exact differentiation and the numerical class checkers.

pub mod checks;
pub mod cutoffs;
pub mod diff;
pub mod dsl;
pub mod expr;
pub mod grid;
pub mod report;
pub mod tape;

use thiserror::Error;

use crate::grading::GradingError;

pub use checks::{
    decompose_hs, homogeneity_defect, homogeneous_check, hs_check, schwartz_check, symbol_estimate,
    CheckOptions, HsDecomposition, HsReport, HomogeneousReport,
};
pub use cutoffs::CutoffFamily;
pub use diff::{differentiate, fd_derivative, MultiIndex};
pub use dsl::parse;
pub use expr::{Frame, Layout, Node, SymbolExpr};
pub use grid::EvaluationGrid;
pub use report::{DecayReport, SeminormReport};
pub use tape::{evaluate, Tape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymbolError {
    #[error("arity mismatch: expected {expected} slots, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("domain error in `{node}`: {detail}")]
    Domain { node: String, detail: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("finite-difference step {h} underflows at the evaluation point")]
    StepUnderflow { h: f64 },
    #[error("grid too small to fit a slope: {shells} shells (need at least 4)")]
    GridTooSmall { shells: usize },
    #[error("non-homogeneous: scaling limit changed by {rel_change:e} between the last two scales")]
    NonHomogeneous { rel_change: f64 },
    #[error("non-finite value {value} at {point:?}")]
    NonFinite { value: f64, point: Vec<f64> },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Grading(#[from] GradingError),
}

pub type Result<T> = std::result::Result<T, SymbolError>;
