//! Exact symbolic derivatives and a finite-difference cross-check.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::expr::{key, Frame, Node, SymbolExpr};
use super::tape::Tape;
use super::{Result, SymbolError};

/// Derivative orders, one entry per variable slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(entries: Vec<usize>) -> Self {
        Self(entries)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, slot: usize) -> Self {
        let mut v = vec![0; n];
        v[slot] = 1;
        Self(v)
    }

    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| b == 0)
    }

    /// Homogeneous order over the slots of `frame`; other slots count zero.
    pub fn weighted_order(&self, frame: &Frame) -> f64 {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(slot, &b)| frame.weight(slot).map(|w| (w as f64) * b as f64))
            .sum()
    }

    pub fn bumped(&self, slot: usize) -> Self {
        let mut v = self.0.clone();
        if v.len() <= slot {
            v.resize(slot + 1, 0);
        }
        v[slot] += 1;
        Self(v)
    }

    /// Entries restricted to `range`.
    pub fn part(&self, range: std::ops::Range<usize>) -> Vec<usize> {
        range.map(|i| self.0.get(i).copied().unwrap_or(0)).collect()
    }

    /// All indices over `n` slots supported on `slots` with total order at most `max_total`,
    /// ordered by total order.
    pub fn enumerate(n: usize, slots: &[usize], max_total: usize) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(n)];
        let mut frontier = out.clone();
        for _ in 0..max_total {
            let mut next = Vec::new();
            for m in &frontier {
                let last = slots.iter().rposition(|&s| m.0[s] > 0).unwrap_or(0);
                for &s in &slots[last..] {
                    next.push(m.bumped(s));
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|b| b.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

/// First derivative with respect to one root-level slot.
pub fn derivative(e: &SymbolExpr, slot: usize) -> SymbolExpr {
    let mut memo = HashMap::new();
    d(e, slot, &mut memo)
}

fn d(e: &SymbolExpr, k: usize, memo: &mut HashMap<(usize, usize), SymbolExpr>) -> SymbolExpr {
    if let Some(v) = memo.get(&(key(e), k)) {
        return v.clone();
    }
    let r = match e.node() {
        Node::Const(_) => SymbolExpr::zero(),
        Node::Var(i) => {
            if *i == k {
                SymbolExpr::one()
            } else {
                SymbolExpr::zero()
            }
        }
        Node::Add(a, b) => d(a, k, memo).add(&d(b, k, memo)),
        Node::Mul(a, b) => {
            let da = d(a, k, memo);
            let db = d(b, k, memo);
            da.mul(b).add(&a.mul(&db))
        }
        Node::Div(a, b) => {
            let da = d(a, k, memo);
            let db = d(b, k, memo);
            da.div(b).sub(&e.mul(&db).div(b))
        }
        Node::Neg(a) => d(a, k, memo).neg(),
        Node::Powi(a, n) => {
            let da = d(a, k, memo);
            if da.is_zero() {
                SymbolExpr::zero()
            } else {
                a.powi(n - 1).scale(*n as f64).mul(&da)
            }
        }
        Node::Powf(a, p) => {
            let da = d(a, k, memo);
            if da.is_zero() {
                SymbolExpr::zero()
            } else {
                a.powf(p - 1.0).scale(*p).mul(&da)
            }
        }
        Node::Exp(a) => e.mul(&d(a, k, memo)),
        Node::Glue(a) => {
            let da = d(a, k, memo);
            if da.is_zero() {
                SymbolExpr::zero()
            } else {
                SymbolExpr::guard(e, &a.powi(-2)).mul(&da)
            }
        }
        Node::Guard(c, b) => {
            let dc = d(c, k, memo);
            let db = d(b, k, memo);
            SymbolExpr::guard(&dc, b).add(&SymbolExpr::guard(c, &db))
        }
        Node::Branch { test, threshold, near, far } => {
            SymbolExpr::branch(test, *threshold, &d(near, k, memo), &d(far, k, memo))
        }
        Node::Compose(inner, args) => {
            let used = inner.free_slots();
            let mut terms = Vec::new();
            for i in used {
                let Some(arg) = args.get(i) else { continue };
                let da = d(arg, k, memo);
                if da.is_zero() {
                    continue;
                }
                let di = d(inner, i, memo);
                if di.is_zero() {
                    continue;
                }
                terms.push(di.compose(args).mul(&da));
            }
            SymbolExpr::sum(terms)
        }
    };
    memo.insert((key(e), k), r.clone());
    r
}

/// `D^beta e` as an exact expression.
pub fn differentiate(e: &SymbolExpr, beta: &MultiIndex) -> Result<SymbolExpr> {
    let mut out = e.clone();
    for (slot, &n) in beta.entries().iter().enumerate() {
        for _ in 0..n {
            if out.is_zero() {
                return Ok(out);
            }
            out = derivative(&out, slot);
        }
    }
    Ok(out)
}

/// Central finite-difference estimate of `D^beta e` at `pt` with step `h`.
///
/// Uses the tensor product of centred `n`-th differences, so the error is `O(h^2)`.
pub fn fd_derivative(e: &SymbolExpr, beta: &MultiIndex, pt: &[f64], h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(SymbolError::StepUnderflow { h });
    }
    if beta.len() > pt.len() {
        return Err(SymbolError::Arity { expected: beta.len(), got: pt.len() });
    }
    for (slot, &n) in beta.entries().iter().enumerate() {
        if n > 0 && (pt[slot] + h == pt[slot] || pt[slot] - h == pt[slot]) {
            return Err(SymbolError::StepUnderflow { h });
        }
    }
    let tape = Tape::compile(e)?;
    let active: Vec<(usize, usize)> = beta
        .entries()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| (s, n))
        .collect();
    let mut work = tape.workspace();
    let mut p = pt.to_vec();
    stencil(&tape, &mut work, &active, 0, &mut p, h)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn stencil(
    tape: &Tape,
    work: &mut super::tape::Workspace,
    active: &[(usize, usize)],
    level: usize,
    p: &mut Vec<f64>,
    h: f64,
) -> Result<f64> {
    if level == active.len() {
        return tape.eval_with(work, p);
    }
    let (slot, n) = active[level];
    let centre = p[slot];
    let mut acc = 0.0;
    for j in 0..=n {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        p[slot] = centre + (n as f64 / 2.0 - j as f64) * h;
        acc += sign * binomial(n, j) * stencil(tape, work, active, level + 1, p, h)?;
    }
    p[slot] = centre;
    Ok(acc / h.powi(n as i32))
}
