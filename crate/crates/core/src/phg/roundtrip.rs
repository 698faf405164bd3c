//! Extraction and construction composed in either order.

use serde::Serialize;

use super::construction::{build_extension, epsilon_schedule, split_term};
use super::extraction::{certify_hs, extract_expansion};
use super::{Expansion, ExpansionTerm, Homogeneity, PhgError, PhgOptions, Result};
use crate::symbol::checks::schwartz_check;
use crate::symbol::{DecayReport, EvaluationGrid, HsDecomposition, HsReport, Layout, SymbolExpr, Tape};

#[derive(Debug, Clone)]
pub enum Direction {
    /// Extract from `u`, rebuild from the homogeneous parts, compare at `t = 1`.
    Extract { u: SymbolExpr, m: f64, n: usize },
    /// Build from the expansion, extract again, compare the terms.
    Build { expansion: Expansion },
}

#[derive(Debug, Clone, Serialize)]
pub struct TermCheck {
    pub j: usize,
    pub order: f64,
    pub k_radius: f64,
    /// Largest `|a'_j - a_j|` on a shell relative to the shell supremum of `|a_j|`.
    pub max_rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTripReport {
    pub direction: &'static str,
    pub terms: Vec<TermCheck>,
    pub hs: Option<HsReport>,
    /// Decay of the mismatch at `t = 1`.
    pub restriction: Option<DecayReport>,
    pub pass: bool,
}

/// Relative tolerance for recovered terms.
pub const TERM_TOLERANCE: f64 = 1e-6;

fn frequency_grid(layout: &Layout, opts: &PhgOptions) -> Result<EvaluationGrid> {
    Ok(EvaluationGrid::standard(layout.n_x, &layout.frame(), opts.seed)?)
}

/// Splits `a` at the smallest dyadic radius where its scaling limit has converged.
fn split_adaptive(a: &SymbolExpr, order: f64, grid: &EvaluationGrid, opts: &PhgOptions) -> Result<(f64, HsDecomposition)> {
    let outer = *grid.shells().last().expect("shells");
    let mut k = 1.0;
    loop {
        match split_term(a, order, grid, k, opts) {
            Ok(d) => return Ok((k, d)),
            Err(e) if 4.0 * k >= outer => return Err(e),
            Err(_) => k *= 2.0,
        }
    }
}

/// Largest shell-relative deviation of `approx` from `exact` beyond `k_radius`.
fn compare_on_shells(approx: &SymbolExpr, exact: &SymbolExpr, grid: &EvaluationGrid, k_radius: f64) -> Result<f64> {
    let (ta, te) = (Tape::compile(approx)?, Tape::compile(exact)?);
    let (mut wa, mut we) = (ta.workspace(), te.workspace());
    let mut worst: f64 = 0.0;
    for &r in grid.shells().iter().filter(|&&r| r > k_radius) {
        let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
        for p in grid.points_at(r, true) {
            let e = te.eval_with(&mut we, &p)?;
            diff = diff.max((ta.eval_with(&mut wa, &p)? - e).abs());
            scale = scale.max(e.abs());
        }
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        } else if diff > 0.0 {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

/// Runs one direction of the correspondence between expansions and extensions.
pub fn verify_round_trip(direction: &Direction, layout: &Layout, opts: &PhgOptions) -> Result<RoundTripReport> {
    let layout = layout.with_t();
    let xi_grid = frequency_grid(&layout, opts)?;
    match direction {
        Direction::Extract { u, m, n } => {
            let ext_grid = EvaluationGrid::standard(layout.n_x, &layout.extended_frame(), opts.seed)?;
            let cert = certify_hs(u, *m, &ext_grid, opts)?;
            let extraction = extract_expansion(u, *m, *n, &layout, &cert, opts)?;
            let mut homogeneous = Vec::new();
            let mut terms = Vec::new();
            for (j, term) in extraction.expansion.terms.iter().enumerate() {
                let (k, split) = split_adaptive(&term.expr, term.order, &xi_grid, opts)?;
                let err = compare_on_shells(&split.u_prime, &term.expr, &xi_grid, 2.0 * k)?;
                terms.push(TermCheck { j, order: term.order, k_radius: k, max_rel_error: err, pass: err.is_finite() });
                homogeneous.push(ExpansionTerm { expr: split.u_prime, order: term.order, kind: Homogeneity::OnTheNose });
            }
            let rebuilt = Expansion { m: *m, layout: layout.without_t(), terms: homogeneous, remainder: None };
            let schedule = epsilon_schedule(&rebuilt, &xi_grid, &opts.check)?;
            let b = build_extension(&rebuilt, &schedule)?;
            let grid = xi_grid.clone().covering(4.0 / schedule.min());
            let mismatch = b.b.sub(u).restrict(layout.t(), 1.0);
            let restriction = schwartz_check(&mismatch, &grid, &opts.check)?;
            let pass = restriction.pass;
            Ok(RoundTripReport { direction: "extract", terms, hs: Some(cert.report), restriction: Some(restriction), pass })
        }
        Direction::Build { expansion } => {
            if expansion.is_empty() {
                return Err(PhgError::InvalidParameter("empty expansion".into()));
            }
            let schedule = epsilon_schedule(expansion, &xi_grid, &opts.check)?;
            let built = build_extension(expansion, &schedule)?;
            let cover = 4.0 / schedule.min();
            let ext_grid =
                EvaluationGrid::standard(layout.n_x, &layout.extended_frame(), opts.seed)?.covering(cover);
            let cert = certify_hs(&built.b, expansion.m, &ext_grid, opts)?;
            let grid = xi_grid.clone().covering(cover);
            let mismatch = built.b.restrict(layout.t(), 1.0).sub(&expansion.partial_sum(expansion.len()));
            let restriction = schwartz_check(&mismatch, &grid, &opts.check)?;
            let extraction = extract_expansion(&built.b, expansion.m, expansion.len() - 1, &layout, &cert, opts)?;
            let mut terms = Vec::new();
            for (j, (got, want)) in extraction.expansion.terms.iter().zip(&expansion.terms).enumerate() {
                let k = (1.0 / (256.0 * schedule.eps[j])).max(1.0);
                let split = split_term(&got.expr, got.order, &grid, k, opts)?;
                let err = compare_on_shells(&split.u_prime, &want.expr, &grid, 2.0 * k)?;
                terms.push(TermCheck { j, order: got.order, k_radius: k, max_rel_error: err, pass: err <= TERM_TOLERANCE });
            }
            let pass = restriction.pass && terms.iter().all(|t| t.pass);
            Ok(RoundTripReport { direction: "build", terms, hs: Some(cert.report), restriction: Some(restriction), pass })
        }
    }
}
