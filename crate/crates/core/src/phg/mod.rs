//! Polyhomogeneous symbols and their homogeneous-modulo-Schwartz extensions.
//!
//! Both directions are implemented: extracting the expansion `a ~ sum a_j` from
//! an extension `u(x, xi, t)`, and building an extension `b` from an expansion.

pub mod construction;
pub mod extraction;
pub mod homogenize;
pub mod roundtrip;

use serde::Serialize;
use thiserror::Error;

use crate::symbol::{CheckOptions, Layout, SymbolError, SymbolExpr};

pub use construction::{
    build_extension, correct_restriction, epsilon_schedule, split_term, EpsilonSchedule, ExtensionResult,
};
pub use extraction::{divide_by_t, extract_expansion, make_b, certify_hs, ExtractionResult, HsCertificate};
pub use homogenize::homogenize_polynomial;
pub use roundtrip::{verify_round_trip, Direction, RoundTripReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhgError {
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("weighted degree {degree} exceeds the order {m}")]
    DegreeTooHigh { degree: u32, m: i32 },
    #[error("not a polynomial in the frequency variables: {0}")]
    NotPolynomial(String),
    #[error("refused: {0}; run hs_check on the input and pass its certificate")]
    Uncertified(String),
    #[error("not divisible by t: f(x, xi, 0) = {value:e} at {point:?}")]
    NotInI0 { value: f64, point: Vec<f64> },
    #[error("stage {stage}: {source}")]
    Stage { stage: usize, source: Box<PhgError> },
    #[error("term {term} is not a symbol of its order on the grid: {detail}")]
    TermNotSymbol { term: usize, detail: String },
    #[error("schedule covers {have} terms but {needed} were requested")]
    ScheduleTooShort { needed: usize, have: usize },
    #[error("a and b do not have the same asymptotic expansion: {0}")]
    ExpansionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, PhgError>;

/// How a term is known to be homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Homogeneity {
    OnTheNose,
    ModuloSchwartz,
}

#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    pub expr: SymbolExpr,
    pub order: f64,
    pub kind: Homogeneity,
}

/// `a ~ sum_j a_j` with `a_j` of order `m - j`, over a layout without `t`.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub m: f64,
    pub layout: Layout,
    pub terms: Vec<ExpansionTerm>,
    pub remainder: Option<SymbolExpr>,
}

impl Expansion {
    /// Terms `a_j` of order `m - j`, all homogeneous on the nose.
    pub fn on_the_nose(m: f64, layout: &Layout, terms: Vec<SymbolExpr>) -> Self {
        let terms = terms
            .into_iter()
            .enumerate()
            .map(|(j, expr)| ExpansionTerm { expr, order: m - j as f64, kind: Homogeneity::OnTheNose })
            .collect();
        Self { m, layout: layout.without_t(), terms, remainder: None }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Partial sum of the first `n` terms.
    pub fn partial_sum(&self, n: usize) -> SymbolExpr {
        SymbolExpr::sum(self.terms.iter().take(n).map(|t| t.expr.clone()))
    }
}

/// Tolerances shared by the extension algorithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhgOptions {
    /// Below this `|t|` the quotient by `t` switches to its integral form.
    pub t_switch: f64,
    pub check: CheckOptions,
    pub limit_tolerance: f64,
    pub seed: u64,
}

impl Default for PhgOptions {
    fn default() -> Self {
        Self { t_switch: 1e-3, check: CheckOptions::default(), limit_tolerance: 1e-6, seed: 0 }
    }
}

/// Dilation samples used for modulo-Schwartz certification.
pub const HS_SAMPLES: [f64; 3] = [1.25, 1.5, 2.0];
