//! Exact homogenization of polynomial symbols.

use std::collections::BTreeMap;

use super::{PhgError, Result};
use crate::symbol::{Layout, Node, SymbolExpr};

/// Monomials in the frequency slots with coefficients that may depend on `x`.
pub(crate) type Poly = BTreeMap<Vec<u32>, SymbolExpr>;

fn constant_poly(d: usize, c: SymbolExpr) -> Poly {
    let mut p = Poly::new();
    if !c.is_zero() {
        p.insert(vec![0; d], c);
    }
    p
}

fn add_into(p: &mut Poly, k: Vec<u32>, c: SymbolExpr) {
    let e = p.entry(k).or_insert_with(SymbolExpr::zero);
    *e = e.add(&c);
}

fn mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (ka, ca) in a {
        for (kb, cb) in b {
            let k: Vec<u32> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
            add_into(&mut out, k, ca.mul(cb));
        }
    }
    out
}

pub(crate) fn expand(e: &SymbolExpr, layout: &Layout) -> Result<Poly> {
    let d = layout.d();
    let freq = layout.n_x..layout.n_x + d;
    if !e.free_slots().iter().any(|s| freq.contains(s)) {
        return Ok(constant_poly(d, e.clone()));
    }
    match e.node() {
        Node::Var(i) => {
            let mut k = vec![0; d];
            k[i - layout.n_x] = 1;
            Ok(Poly::from([(k, SymbolExpr::one())]))
        }
        Node::Add(a, b) => {
            let mut p = expand(a, layout)?;
            for (k, c) in expand(b, layout)? {
                add_into(&mut p, k, c);
            }
            Ok(p)
        }
        Node::Mul(a, b) => Ok(mul(&expand(a, layout)?, &expand(b, layout)?)),
        Node::Div(a, b) if !b.free_slots().iter().any(|s| freq.contains(s)) => {
            let r = b.recip();
            Ok(expand(a, layout)?.into_iter().map(|(k, c)| (k, c.mul(&r))).collect())
        }
        Node::Neg(a) => Ok(expand(a, layout)?.into_iter().map(|(k, c)| (k, c.neg())).collect()),
        Node::Powi(a, n) if *n >= 0 => {
            let base = expand(a, layout)?;
            let mut acc = constant_poly(d, SymbolExpr::one());
            for _ in 0..*n {
                acc = mul(&acc, &base);
            }
            Ok(acc)
        }
        _ => Err(PhgError::NotPolynomial(e.describe(120))),
    }
}

/// Writes `a = sum_k P_k` by weighted degree and returns `u = sum_k t^{m-k} P_k`,
/// homogeneous of order `m` in `(xi, t)` with `u(x, xi, 1) = a`.
pub fn homogenize_polynomial(a: &SymbolExpr, m: u32, layout: &Layout) -> Result<SymbolExpr> {
    let layout = layout.with_t();
    let poly = expand(a, &layout)?;
    let rho = layout.weights.rho();
    let t = SymbolExpr::var(layout.t());
    let mut by_degree: BTreeMap<u32, Vec<SymbolExpr>> = BTreeMap::new();
    for (k, c) in poly {
        if c.is_zero() {
            continue;
        }
        let degree: u32 = k.iter().zip(rho).map(|(e, r)| e * r).sum();
        if degree > m {
            return Err(PhgError::DegreeTooHigh { degree, m: m as i32 });
        }
        let monomial = SymbolExpr::product(
            k.iter()
                .enumerate()
                .map(|(slot, &e)| SymbolExpr::var(layout.xi(slot)).powi(e as i32)),
        );
        by_degree.entry(degree).or_default().push(c.mul(&monomial));
    }
    Ok(SymbolExpr::sum(
        by_degree
            .into_iter()
            .map(|(k, parts)| t.powi((m - k) as i32).mul(&SymbolExpr::sum(parts))),
    ))
}

/// Weighted-degree parts `P_0, ..., P_m` of a polynomial symbol.
pub fn weighted_parts(a: &SymbolExpr, m: u32, layout: &Layout) -> Result<Vec<SymbolExpr>> {
    let poly = expand(a, layout)?;
    let rho = layout.weights.rho();
    let mut parts = vec![SymbolExpr::zero(); m as usize + 1];
    for (k, c) in poly {
        let degree: u32 = k.iter().zip(rho).map(|(e, r)| e * r).sum();
        if degree > m {
            return Err(PhgError::DegreeTooHigh { degree, m: m as i32 });
        }
        let monomial = SymbolExpr::product(
            k.iter()
                .enumerate()
                .map(|(slot, &e)| SymbolExpr::var(layout.xi(slot)).powi(e as i32)),
        );
        let slot = &mut parts[degree as usize];
        *slot = slot.add(&c.mul(&monomial));
    }
    Ok(parts)
}
