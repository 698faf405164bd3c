//! Homogeneous-modulo-Schwartz extension of a polyhomogeneous expansion.
//!
//! `b = sum_j t^j b_j` where `b_j` is the homogeneous extension of order `m - j`
//! of `A_j = phi(delta_{eps_j} xi) a_j`. The `eps_j` shrink fast enough that the
//! sum converges in every symbol seminorm; on the grid only the terms with
//! `eps_j |xi| >= tau(t) / 2` are nonzero.

use serde::Serialize;

use super::extraction::homogeneous_extension;
use super::{Expansion, Homogeneity, PhgError, PhgOptions, Result};
use crate::grading::QuasiNorm;
use crate::symbol::checks::{decompose_hs, dilated, schwartz_check, symbol_estimate};
use crate::symbol::cutoffs::{self, Profile};
use crate::symbol::{CheckOptions, DecayReport, EvaluationGrid, HsDecomposition, Layout, SymbolExpr, Tape};

/// Largest admissible `eps_j`.
pub const EPS_CAP: f64 = 0.25;

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonSchedule {
    pub eps: Vec<f64>,
    /// Largest measured symbol constant of each cut-off term.
    pub constants: Vec<f64>,
    /// How each `eps_j` was fixed.
    pub provenance: Vec<String>,
}

impl EpsilonSchedule {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.eps.iter().copied().fold(EPS_CAP, f64::min)
    }
}

/// `eps_j = min(eps_{j-1}, 1/4, 4^{-j} / max(1, C_j))` with `C_j` the largest
/// measured constant of `phi(delta_{1/4} xi) a_j` up to derivative order `min(j, deriv_max)`.
pub fn epsilon_schedule(exp: &Expansion, grid: &EvaluationGrid, opts: &CheckOptions) -> Result<EpsilonSchedule> {
    let frame = exp.layout.frame();
    let phi = dilated(&cutoffs::phi(&frame), &frame, EPS_CAP);
    let (mut eps, mut constants, mut provenance) = (Vec::new(), Vec::new(), Vec::new());
    let mut prev = EPS_CAP;
    for (j, term) in exp.terms.iter().enumerate() {
        if term.kind != Homogeneity::OnTheNose {
            return Err(PhgError::InvalidParameter(format!(
                "term {j} is homogeneous only modulo Schwartz; split it first"
            )));
        }
        let local = CheckOptions { deriv_max: j.min(opts.deriv_max), ..*opts };
        let report = symbol_estimate(&SymbolExpr::guard(&phi, &term.expr), term.order, grid, &local)?;
        if !report.pass {
            let worst = report.fits.iter().map(|f| f.drift).fold(f64::NEG_INFINITY, f64::max);
            return Err(PhgError::TermNotSymbol { term: j, detail: format!("ratio drift {worst:.3}") });
        }
        let c = report.fits.iter().map(|f| f.constant).fold(0.0, f64::max);
        let candidate = 4f64.powi(-(j as i32)) / c.max(1.0);
        let e = prev.min(EPS_CAP).min(candidate);
        let why = if e == candidate && candidate < prev.min(EPS_CAP) {
            format!("4^-{j} / max(1, C = {c:.6e})")
        } else if e == EPS_CAP {
            "cap 1/4".to_string()
        } else {
            format!("monotone: eps_{}", j.saturating_sub(1))
        };
        eps.push(e);
        constants.push(c);
        provenance.push(why);
        prev = e;
    }
    Ok(EpsilonSchedule { eps, constants, provenance })
}

/// `tau(t)`: `1` for `|t| <= 1/2`, `|t|` otherwise.
fn tau(t: f64) -> f64 {
    if t.abs() <= 0.5 {
        1.0
    } else {
        t.abs()
    }
}

#[derive(Debug, Clone)]
pub struct ExtensionResult {
    pub b: SymbolExpr,
    pub m: f64,
    pub layout: Layout,
    /// The cut-off terms `A_j`.
    pub cut_terms: Vec<SymbolExpr>,
    /// The summands `t^j b_j` of `b`.
    pub summands: Vec<SymbolExpr>,
    pub schedule: EpsilonSchedule,
    norm: QuasiNorm,
}

impl ExtensionResult {
    /// Number of leading terms that can be nonzero at `point`.
    pub fn j_max(&self, point: &[f64]) -> usize {
        let xi = &point[self.layout.n_x..self.layout.n_x + self.layout.d()];
        let t = point[self.layout.t()];
        let r = self.norm.eval(xi);
        let bound = tau(t) / 2.0;
        self.schedule.eps.iter().filter(|&&e| e * r >= bound).count()
    }

    /// Sum of the first `j_max(point)` summands.
    pub fn eval_truncated(&self, point: &[f64]) -> Result<f64> {
        let n = self.j_max(point);
        let mut acc = 0.0;
        for s in &self.summands[..n] {
            acc += Tape::compile(s)?.eval(point)?;
        }
        Ok(acc)
    }
}

/// Builds `b` from on-the-nose terms and their schedule.
pub fn build_extension(exp: &Expansion, schedule: &EpsilonSchedule) -> Result<ExtensionResult> {
    if schedule.len() < exp.len() {
        return Err(PhgError::ScheduleTooShort { needed: exp.len(), have: schedule.len() });
    }
    let layout = exp.layout.with_t();
    let frame = layout.frame();
    let t = SymbolExpr::var(layout.t());
    let phi = cutoffs::phi(&frame);
    let mut cut_terms = Vec::new();
    let mut summands = Vec::new();
    for (j, term) in exp.terms.iter().enumerate() {
        let a = SymbolExpr::guard(&dilated(&phi, &frame, schedule.eps[j]), &term.expr);
        let bj = homogeneous_extension(&a, term.order, &layout, Profile::Narrow);
        summands.push(t.powi(j as i32).mul(&bj));
        cut_terms.push(a);
    }
    let norm = QuasiNorm::smooth(layout.weights.clone());
    Ok(ExtensionResult {
        b: SymbolExpr::sum(summands.iter().cloned()),
        m: exp.m,
        layout,
        cut_terms,
        summands,
        schedule: schedule.clone(),
        norm,
    })
}

/// `u = b + (a - b(., ., 1)) phi~(t)`, so that `u(x, xi, 1) = a` exactly.
///
/// The correction `a - b(., ., 1)` must pass the Schwartz check on `grid`.
pub fn correct_restriction(
    b: &SymbolExpr,
    a: &SymbolExpr,
    layout: &Layout,
    grid: &EvaluationGrid,
    opts: &CheckOptions,
) -> Result<(SymbolExpr, DecayReport)> {
    let layout = layout.with_t();
    let l = a.sub(&b.restrict(layout.t(), 1.0));
    let report = schwartz_check(&l, grid, opts)?;
    if !report.pass {
        return Err(PhgError::ExpansionMismatch(format!(
            "a - b(., ., 1) decays only like r^{:.3}",
            report.worst_slope
        )));
    }
    let phi_tilde = cutoffs::plateau(&SymbolExpr::var(layout.t()), 1.0, 2.0);
    Ok((b.add(&l.mul(&phi_tilde)), report))
}

/// `a = a' + a''` with `a'` homogeneous on the nose outside the quasi-ball of radius `k_radius`.
pub fn split_term(
    a: &SymbolExpr,
    order: f64,
    grid: &EvaluationGrid,
    k_radius: f64,
    opts: &PhgOptions,
) -> Result<HsDecomposition> {
    Ok(decompose_hs(a, order, grid, k_radius, opts.limit_tolerance)?)
}
