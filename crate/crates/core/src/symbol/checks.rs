//! Grid verifiers for Schwartz decay, symbol estimates and homogeneity.
//!
//! Decay is read off least-squares slopes of `log sup` against `log r` over the
//! outer half of the dyadic shells. Values below `noise_floor` times the
//! magnitude of their intermediate terms count as zero.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::cutoffs;
use super::diff::{derivative, MultiIndex};
use super::expr::{Frame, SymbolExpr};
use super::grid::EvaluationGrid;
use super::report::{real, DecayFit, DecayReport, OrderVerdict, SeminormFit, SeminormReport};
use super::tape::Tape;
use super::{Result, SymbolError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOptions {
    pub k_max: usize,
    pub deriv_max: usize,
    pub slope_tolerance: f64,
    pub drift_tolerance: f64,
    pub noise_floor: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { k_max: 4, deriv_max: 2, slope_tolerance: 0.3, drift_tolerance: 0.3, noise_floor: 1e-11 }
    }
}

/// All derivatives `D^alpha_x D^beta` up to total order `deriv_max` that are not
/// identically zero, with `alpha` over base slots `0..n_x` and `beta` over the frame.
pub fn derivative_table(
    e: &SymbolExpr,
    n_x: usize,
    frame: &Frame,
    deriv_max: usize,
) -> Vec<(MultiIndex, SymbolExpr)> {
    let free = e.free_slots();
    let mut slots: Vec<usize> = (0..n_x).filter(|s| free.contains(s)).collect();
    slots.extend(frame.offset..frame.offset + frame.dim());
    let n = frame.offset + frame.dim();
    let mut cache: HashMap<MultiIndex, SymbolExpr> = HashMap::new();
    let mut out = Vec::new();
    for idx in MultiIndex::enumerate(n, &slots, deriv_max) {
        let expr = if idx.is_zero() {
            e.clone()
        } else {
            let slot = idx.entries().iter().rposition(|&b| b > 0).expect("nonzero index");
            let mut parent = idx.entries().to_vec();
            parent[slot] -= 1;
            match cache.get(&MultiIndex::new(parent)) {
                Some(p) => derivative(p, slot),
                None => continue,
            }
        };
        if expr.is_zero() {
            continue;
        }
        cache.insert(idx.clone(), expr.clone());
        out.push((idx, expr));
    }
    out
}

fn depends_on_base(e: &SymbolExpr, grid: &EvaluationGrid) -> bool {
    let n_x = grid.base_points().first().map_or(0, |b| b.len());
    e.free_slots().iter().any(|&s| s < n_x)
}

/// Noise-clamped suprema of `|e|` over each radius in `radii`.
pub fn radial_sups(e: &SymbolExpr, grid: &EvaluationGrid, radii: &[f64], noise: f64) -> Result<Vec<f64>> {
    let tape = Tape::compile(e)?;
    let all_bases = depends_on_base(e, grid);
    radii
        .par_iter()
        .map(|&r| {
            let mut w = tape.workspace();
            let mut sup: f64 = 0.0;
            for p in grid.points_at(r, all_bases) {
                let (v, mag) = tape.eval_scaled(&mut w, &p)?;
                if !v.is_finite() {
                    return Err(SymbolError::NonFinite { value: v, point: p });
                }
                if v.abs() > noise * mag {
                    sup = sup.max(v.abs());
                }
            }
            Ok(sup)
        })
        .collect()
}

/// Least-squares slope of `log y` against `log r` over the outer half of the shells.
pub fn fit_slope(radii: &[f64], values: &[f64]) -> Result<f64> {
    let n = radii.len();
    if n < 4 {
        return Err(SymbolError::GridTooSmall { shells: n });
    }
    let window = n.div_ceil(2);
    let window = window.max(4).min(n);
    let (r, v) = (&radii[n - window..], &values[n - window..]);
    if *v.last().expect("window") == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(v)
        .filter(|(_, &y)| y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(f64::INFINITY);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

fn split(idx: &MultiIndex, grid: &EvaluationGrid) -> (Vec<usize>, Vec<usize>) {
    let n_x = grid.base_points().first().map_or(0, |b| b.len());
    let f = grid.frame();
    (idx.part(0..n_x), idx.part(f.offset..f.offset + f.dim()))
}

/// Decay evidence for `e` and its derivatives up to `deriv_max`.
pub fn schwartz_check(e: &SymbolExpr, grid: &EvaluationGrid, opts: &CheckOptions) -> Result<DecayReport> {
    let shells = grid.shells().to_vec();
    if shells.len() < 4 {
        return Err(SymbolError::GridTooSmall { shells: shells.len() });
    }
    let n_x = grid.base_points().first().map_or(0, |b| b.len());
    let mut fits = Vec::new();
    for (idx, d) in derivative_table(e, n_x, grid.frame(), opts.deriv_max) {
        let sups = radial_sups(&d, grid, &shells, opts.noise_floor)?;
        let slope = fit_slope(&shells, &sups)?;
        let (alpha, beta) = split(&idx, grid);
        fits.push(DecayFit { alpha, beta, sups, slope });
    }
    let worst_slope = fits.iter().map(|f| f.slope).fold(f64::NEG_INFINITY, f64::max);
    let verdicts: Vec<OrderVerdict> = (1..=opts.k_max)
        .map(|k| OrderVerdict { k, pass: worst_slope <= -(k as f64) + opts.slope_tolerance })
        .collect();
    let pass = verdicts.iter().all(|v| v.pass);
    Ok(DecayReport {
        k_max: opts.k_max,
        deriv_max: opts.deriv_max,
        slope_tolerance: opts.slope_tolerance,
        shells,
        fits,
        worst_slope,
        verdicts,
        pass,
    })
}

/// Measured constants of the order-`m` symbol estimates.
pub fn symbol_estimate(e: &SymbolExpr, m: f64, grid: &EvaluationGrid, opts: &CheckOptions) -> Result<SeminormReport> {
    let shells = grid.shells().to_vec();
    if shells.len() < 4 {
        return Err(SymbolError::GridTooSmall { shells: shells.len() });
    }
    let n_x = grid.base_points().first().map_or(0, |b| b.len());
    let frame = grid.frame().clone();
    let mut fits = Vec::new();
    for (idx, d) in derivative_table(e, n_x, &frame, opts.deriv_max) {
        let order = idx.weighted_order(&frame);
        let sups = radial_sups(&d, grid, &shells, opts.noise_floor)?;
        let inner = radial_sups(&d, grid, grid.inner_radii(), opts.noise_floor)?;
        let ratios: Vec<f64> =
            shells.iter().zip(&sups).map(|(r, s)| s / (1.0 + r).powf(m - order)).collect();
        let inner_max = grid
            .inner_radii()
            .iter()
            .zip(&inner)
            .map(|(r, s)| s / (1.0 + r).powf(m - order))
            .fold(0.0, f64::max);
        let constant = ratios.iter().copied().fold(inner_max, f64::max);
        let drift = fit_slope(&shells, &ratios)?;
        let pass = constant.is_finite() && drift <= opts.drift_tolerance;
        let (alpha, beta) = split(&idx, grid);
        fits.push(SeminormFit { alpha, beta, weighted_order: order, constant, drift, ratios, pass });
    }
    let pass = fits.iter().all(|f| f.pass);
    Ok(SeminormReport {
        m,
        deriv_max: opts.deriv_max,
        drift_tolerance: opts.drift_tolerance,
        shells,
        fits,
        pass,
    })
}

fn dilation_args(frame: &Frame, s: f64, arity: usize) -> Vec<SymbolExpr> {
    (0..arity.max(frame.offset + frame.dim()))
        .map(|slot| {
            let v = SymbolExpr::var(slot);
            match frame.weight(slot) {
                Some(w) => v.scale(s.powi(w as i32)),
                None => v,
            }
        })
        .collect()
}

/// `u` with the frame block replaced by its dilate `delta_s`.
pub fn dilated(u: &SymbolExpr, frame: &Frame, s: f64) -> SymbolExpr {
    let arity = u.max_slot().map_or(0, |m| m + 1);
    u.compose(&dilation_args(frame, s, arity))
}

/// `u(delta_s .) - s^m u`.
pub fn homogeneity_defect(u: &SymbolExpr, s: f64, m: f64, frame: &Frame) -> Result<SymbolExpr> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(SymbolError::InvalidParameter(format!("dilation factor must be positive, got {s}")));
    }
    Ok(dilated(u, frame, s).sub(&u.scale(s.powf(m))))
}

#[derive(Debug, Clone, Serialize)]
pub struct HsSample {
    pub s: f64,
    pub report: DecayReport,
}

/// Conjunction of decay checks on the dilation defects.
#[derive(Debug, Clone, Serialize)]
pub struct HsReport {
    pub m: f64,
    pub samples: Vec<HsSample>,
    pub pass: bool,
}

/// Schwartz evidence for the homogeneity defects at each `s` in `s_samples`.
pub fn hs_check(
    u: &SymbolExpr,
    m: f64,
    grid: &EvaluationGrid,
    s_samples: &[f64],
    opts: &CheckOptions,
) -> Result<HsReport> {
    if s_samples.is_empty() || s_samples.iter().any(|s| !(1.0..=2.0).contains(s)) {
        return Err(SymbolError::InvalidParameter(format!(
            "dilation samples must be a nonempty subset of [1, 2], got {s_samples:?}"
        )));
    }
    let mut samples = Vec::new();
    for &s in s_samples {
        let defect = homogeneity_defect(u, s, m, grid.frame())?;
        samples.push(HsSample { s, report: schwartz_check(&defect, grid, opts)? });
    }
    let pass = samples.iter().all(|x| x.report.pass);
    Ok(HsReport { m, samples, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousReport {
    pub m: f64,
    pub violations: Vec<(f64, f64)>,
    #[serde(serialize_with = "real")]
    pub max_violation: f64,
}

/// Maximum of `|f(delta_s p) - s^m f(p)| / |p|^m` over the grid for
/// `s` in `{2^{-1/2}, 2^{1/2}, 2, 3}`.
pub fn homogeneous_check(f: &SymbolExpr, m: f64, grid: &EvaluationGrid) -> Result<HomogeneousReport> {
    let tape = Tape::compile(f)?;
    let frame = grid.frame().clone();
    let all_bases = depends_on_base(f, grid);
    let scales = [0.5f64.sqrt(), 2f64.sqrt(), 2.0, 3.0];
    let mut violations = Vec::new();
    for &s in &scales {
        let worst = grid
            .shells()
            .par_iter()
            .map(|&r| {
                let mut w = tape.workspace();
                let mut worst: f64 = 0.0;
                for p in grid.points_at(r, all_bases) {
                    let mut q = p.clone();
                    for (k, &rho) in frame.weights.rho().iter().enumerate() {
                        q[frame.offset + k] *= s.powi(rho as i32);
                    }
                    let a = tape.eval_with(&mut w, &q)?;
                    let b = tape.eval_with(&mut w, &p)?;
                    let v = (a - s.powf(m) * b).abs() / r.powf(m);
                    if !v.is_finite() {
                        return Err(SymbolError::NonFinite { value: v, point: p });
                    }
                    worst = worst.max(v);
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        violations.push((s, worst));
    }
    let max_violation = violations.iter().map(|v| v.1).fold(0.0, f64::max);
    Ok(HomogeneousReport { m, violations, max_violation })
}

/// `u = u' + u''` with `u'` homogeneous of order `m` and `u''` Schwartz away from the origin.
#[derive(Debug, Clone)]
pub struct HsDecomposition {
    /// `2^{-10 m} u(delta_{2^10} .)`, homogeneous up to the limit error.
    pub u_prime: SymbolExpr,
    /// `u - chi_K u'`.
    pub u_dblprime: SymbolExpr,
    pub chi_k: SymbolExpr,
    /// Largest change between the scales `2^9` and `2^10`, relative to `|p|^m`.
    pub rel_change: f64,
    /// The same between `2^8` and `2^9`.
    pub rel_change_prev: f64,
}

/// Splits `u` by its large-scale limit `u' = lim s^{-m} u(delta_s .)`.
pub fn decompose_hs(
    u: &SymbolExpr,
    m: f64,
    grid: &EvaluationGrid,
    k_radius: f64,
    limit_tolerance: f64,
) -> Result<HsDecomposition> {
    let frame = grid.frame().clone();
    let scaled: Vec<SymbolExpr> = [8, 9, 10]
        .iter()
        .map(|&k| {
            let s = 2f64.powi(k);
            dilated(u, &frame, s).scale(s.powf(-m))
        })
        .collect();
    let tapes = scaled.iter().map(Tape::compile).collect::<Result<Vec<_>>>()?;
    let all_bases = depends_on_base(u, grid);
    let radii: Vec<f64> = grid.shells().iter().copied().filter(|&r| r > k_radius).collect();
    let (mut change, mut change_prev): (f64, f64) = (0.0, 0.0);
    for r in radii {
        let mut ws: Vec<_> = tapes.iter().map(Tape::workspace).collect();
        for p in grid.points_at(r, all_bases) {
            let mut v = [0.0; 3];
            for (i, t) in tapes.iter().enumerate() {
                v[i] = t.eval_with(&mut ws[i], &p)?;
            }
            let scale = r.powf(m);
            change = change.max((v[2] - v[1]).abs() / scale);
            change_prev = change_prev.max((v[1] - v[0]).abs() / scale);
        }
    }
    if !(change <= limit_tolerance) {
        return Err(SymbolError::NonHomogeneous { rel_change: change });
    }
    let chi_k = cutoffs::annulus_step(&frame, k_radius, 2.0 * k_radius);
    let u_prime = scaled[2].clone();
    let u_dblprime = u.sub(&SymbolExpr::guard(&chi_k, &u_prime));
    Ok(HsDecomposition { u_prime, u_dblprime, chi_k, rel_change: change, rel_change_prev: change_prev })
}
