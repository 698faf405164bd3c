//! Asymptotic expansion of a homogeneous-modulo-Schwartz extension.
//!
//! With `b_j` the homogeneous extension of `a_j`, the stages are
//! `u_{j+1} = (u_j - b_j) / t` and `a_j = u_j(., ., 0)`. Near `t = 0` each stage
//! is evaluated in its integral form
//! `u_j(t) = 1/(j-1)! int_0^1 (1 - s)^{j-1} d_t^j u(s t) ds`,
//! which avoids the cancellation in the quotient.

use super::{Expansion, ExpansionTerm, Homogeneity, PhgError, PhgOptions, Result, HS_SAMPLES};
use crate::symbol::checks::hs_check;
use crate::symbol::cutoffs::{CutoffFamily, Profile};
use crate::symbol::diff::derivative;
use crate::symbol::grid::{EvaluationGrid, GridSpec};
use crate::symbol::{HsReport, Layout, Node, SymbolExpr, Tape};

/// Eight-point Gauss-Legendre rule on `[-1, 1]`.
const GL_NODES: [(f64, f64); 4] = [
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Nodes and weights mapped to `[0, 1]`.
fn unit_rule() -> Vec<(f64, f64)> {
    GL_NODES
        .iter()
        .flat_map(|&(x, w)| [(0.5 * (1.0 - x), 0.5 * w), (0.5 * (1.0 + x), 0.5 * w)])
        .collect()
}

/// `e` with the `t` slot scaled by `s`.
fn scale_t(e: &SymbolExpr, layout: &Layout, s: f64) -> SymbolExpr {
    let t = layout.t();
    let arity = e.max_slot().map_or(0, |m| m + 1).max(t + 1);
    let args: Vec<SymbolExpr> = (0..arity)
        .map(|slot| if slot == t { SymbolExpr::var(slot).scale(s) } else { SymbolExpr::var(slot) })
        .collect();
    e.compose(&args)
}

/// `1/(k-1)! int_0^1 (1 - s)^{k-1} d(s t) ds` by quadrature, where `d` is the
/// `k`-th `t` derivative of the expression being expanded.
fn taylor_remainder(dk: &SymbolExpr, k: usize, layout: &Layout) -> SymbolExpr {
    let fact: f64 = (1..k).map(|i| i as f64).product();
    SymbolExpr::sum(
        unit_rule()
            .into_iter()
            .map(|(s, w)| scale_t(dk, layout, s).scale(w * (1.0 - s).powi(k as i32 - 1) / fact)),
    )
}

/// `|t|^p` as an expression valid for `t != 0`.
pub(crate) fn abs_t_pow(t: &SymbolExpr, p: f64) -> SymbolExpr {
    if p == 0.0 {
        SymbolExpr::one()
    } else if p.fract() == 0.0 && (p as i64) % 2 == 0 {
        t.powi(p as i32)
    } else {
        t.powi(2).powf(p / 2.0)
    }
}

/// Quotient `f / t` for `f` vanishing at `t = 0`.
///
/// An explicit factor `t` is cancelled exactly. Otherwise the result is the
/// quotient for `|t| >= t_switch` and `int_0^1 d_t f(s t) ds` below it.
pub fn divide_by_t(f: &SymbolExpr, layout: &Layout, opts: &PhgOptions) -> Result<SymbolExpr> {
    let layout = layout.with_t();
    let t_slot = layout.t();
    let t = SymbolExpr::var(t_slot);
    match f.node() {
        Node::Mul(a, b) if matches!(a.node(), Node::Var(i) if *i == t_slot) => return Ok(b.clone()),
        Node::Mul(a, b) if matches!(b.node(), Node::Var(i) if *i == t_slot) => return Ok(a.clone()),
        Node::Var(i) if *i == t_slot => return Ok(SymbolExpr::one()),
        Node::Powi(a, n) if *n >= 1 && matches!(a.node(), Node::Var(i) if *i == t_slot) => {
            return Ok(t.powi(n - 1))
        }
        _ => {}
    }
    check_vanishes_at_zero(f, &layout, opts.seed)?;
    let near = taylor_remainder(&derivative(f, t_slot), 1, &layout);
    let far = f.div(&t);
    Ok(SymbolExpr::branch(&t, opts.t_switch, &near, &far))
}

/// Checks `|f(x, xi, 0)| <= 1e-10 max(1, magnitude)` on the base points and inner shells.
fn check_vanishes_at_zero(f: &SymbolExpr, layout: &Layout, seed: u64) -> Result<()> {
    let f0 = f.restrict(layout.t(), 0.0);
    if let Some(c) = f0.as_const() {
        if c.abs() <= 1e-10 {
            return Ok(());
        }
    }
    let spec = GridSpec { shells: 4, seed, ..GridSpec::default() };
    let grid = EvaluationGrid::new(layout.n_x, &layout.frame(), spec)?.with_fixed(layout.t(), 0.0);
    let tape = Tape::compile(&f0)?;
    let mut w = tape.workspace();
    let mut radii = grid.inner_radii().to_vec();
    radii.extend_from_slice(grid.shells());
    for r in radii {
        for p in grid.points_at(r, true) {
            let (v, mag) = tape.eval_scaled(&mut w, &p)?;
            if !(v.abs() <= 1e-10 * mag.max(1.0)) {
                return Err(PhgError::NotInI0 { value: v, point: p });
            }
        }
    }
    Ok(())
}

/// Evidence that an expression passed the homogeneous-modulo-Schwartz check.
#[derive(Debug, Clone)]
pub struct HsCertificate {
    expr: SymbolExpr,
    m: f64,
    pub report: HsReport,
}

impl HsCertificate {
    pub fn order(&self) -> f64 {
        self.m
    }

    pub fn covers(&self, e: &SymbolExpr, m: f64) -> bool {
        self.expr.ptr_eq(e) && self.m == m
    }
}

/// Runs `hs_check` and returns a certificate when it passes.
pub fn certify_hs(e: &SymbolExpr, m: f64, grid: &EvaluationGrid, opts: &PhgOptions) -> Result<HsCertificate> {
    let report = hs_check(e, m, grid, &HS_SAMPLES, &opts.check)?;
    if !report.pass {
        let worst = report
            .samples
            .iter()
            .map(|s| s.report.worst_slope)
            .fold(f64::NEG_INFINITY, f64::max);
        return Err(PhgError::Uncertified(format!(
            "the order-{m} homogeneity defect decays only like r^{worst:.3}"
        )));
    }
    Ok(HsCertificate { expr: e.clone(), m, report })
}

/// `chi0(t) a + chi1(t) |t|^m a(x, delta_{1/|t|} xi)` for `a` of order `m`.
pub(crate) fn homogeneous_extension(a: &SymbolExpr, m: f64, layout: &Layout, profile: Profile) -> SymbolExpr {
    let layout = layout.with_t();
    let cut = CutoffFamily::new(&layout);
    let t = SymbolExpr::var(layout.t());
    let t2 = t.powi(2);
    let arity = a.max_slot().map_or(0, |s| s + 1).min(layout.t());
    let rho = layout.weights.rho();
    let args: Vec<SymbolExpr> = (0..arity)
        .map(|slot| {
            let v = SymbolExpr::var(slot);
            if slot >= layout.n_x {
                let r = rho[slot - layout.n_x] as i32;
                if r % 2 == 0 {
                    v.mul(&t.powi(-r))
                } else {
                    v.mul(&t2.powf(-(r as f64) / 2.0))
                }
            } else {
                v
            }
        })
        .collect();
    let far = abs_t_pow(&t, m).mul(&a.compose(&args));
    cut.chi0(profile).mul(a).add(&SymbolExpr::guard(&cut.chi1(profile), &far))
}

/// The extension `b` of a certified symbol `a` of order `m`, homogeneous of
/// order `m` for `|t| >= 1` and equal to `a` near `t = 0`.
pub fn make_b(a: &SymbolExpr, m: f64, layout: &Layout, cert: Option<&HsCertificate>) -> Result<SymbolExpr> {
    match cert {
        Some(c) if c.covers(a, m) => Ok(homogeneous_extension(a, m, layout, Profile::Wide)),
        Some(c) => Err(PhgError::Uncertified(format!(
            "the certificate is for a different expression or order ({})",
            c.m
        ))),
        None => Err(PhgError::Uncertified("no certificate supplied".into())),
    }
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub expansion: Expansion,
    /// `u_0 = u, u_1, ..., u_{N+1}`.
    pub stages: Vec<SymbolExpr>,
    /// `b_0, ..., b_N`.
    pub extensions: Vec<SymbolExpr>,
}

/// Extracts `a_0, ..., a_N` from a certified `u` of order `m`.
pub fn extract_expansion(
    u: &SymbolExpr,
    m: f64,
    n: usize,
    layout: &Layout,
    cert: &HsCertificate,
    opts: &PhgOptions,
) -> Result<ExtractionResult> {
    if !cert.covers(u, m) {
        return Err(PhgError::Uncertified(format!("the certificate does not cover u at order {m}")));
    }
    if !(opts.t_switch > 0.0 && opts.t_switch <= 1.0) {
        return Err(PhgError::InvalidParameter(format!("t_switch must lie in (0, 1], got {}", opts.t_switch)));
    }
    let layout = layout.with_t();
    let t_slot = layout.t();
    let t = SymbolExpr::var(t_slot);
    let mut stages = vec![u.clone()];
    let mut extensions = Vec::new();
    let mut terms = Vec::new();
    let mut dk = u.clone();
    for j in 0..=n {
        let uj = stages[j].clone();
        let aj = uj.restrict(t_slot, 0.0);
        let order = m - j as f64;
        let bj = homogeneous_extension(&aj, order, &layout, Profile::Wide);
        dk = derivative(&dk, t_slot);
        let near = taylor_remainder(&dk, j + 1, &layout);
        let far = uj.sub(&bj).div(&t);
        stages.push(SymbolExpr::branch(&t, opts.t_switch, &near, &far));
        terms.push(ExpansionTerm { expr: aj, order, kind: Homogeneity::ModuloSchwartz });
        extensions.push(bj);
    }
    let remainder = stages.last().cloned();
    Ok(ExtractionResult {
        expansion: Expansion { m, layout: layout.without_t(), terms, remainder },
        stages,
        extensions,
    })
}
