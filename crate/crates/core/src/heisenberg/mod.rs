//! The model Heisenberg manifold `R^{d+1}` with an antisymmetric matrix `B`.
//!
//! Group law, model vector fields, exponential charts, the `sigma` symbol
//! change, Kohn-Nirenberg quantization on grids and the zoom actions.

pub mod chart;
pub mod fourier;
pub mod kernel;
pub mod model;

use thiserror::Error;

use crate::symbol::SymbolError;

pub use chart::{
    alpha, alpha_tilde, beta, exp_chart, exp_chart_inverse, flow_rk4, phi_y, phi_y_matrix, transpose_inverse_residual,
    sigma, sigma_tilde, ChartPoint, GroupoidPoint,
};
pub use fourier::{DftConvention, Grid};
pub use kernel::{
    kernel_from_symbol, zoom_intertwining_check, pullback_chart_t1, pushforward_chart_t1, quantize, chart_diagram_check,
    Interpolation, KernelGrid, ZoomReport, DiagramReport,
};
pub use model::HeisenbergModel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HeisenbergError {
    #[error("B is not antisymmetric: b[{j}][{k}] + b[{k}][{j}] = {sum}")]
    NotAntisymmetric { j: usize, k: usize, sum: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("tail {tail:e} exceeds tolerance {tolerance:e}: {what}")]
    Tail { what: String, tail: f64, tolerance: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("malformed grid file: {0}")]
    Format(String),
    #[error("convention mismatch: {0}")]
    Convention(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

pub type Result<T> = std::result::Result<T, HeisenbergError>;
