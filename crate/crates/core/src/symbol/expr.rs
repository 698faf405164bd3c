//! Expression trees for smooth functions of `(x, xi)` or `(x, xi, t)`.
//!
//! Nodes are reference counted and freely shared, so an expression is a DAG.
//! Every traversal that could revisit shared nodes memoizes by node address.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::grading::Weights;

/// Variable layout: `x_1..x_n`, then `xi_1..xi_d`, then optionally `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub n_x: usize,
    pub weights: Weights,
    pub has_t: bool,
}

impl Layout {
    pub fn new(n_x: usize, weights: Weights, has_t: bool) -> Self {
        Self { n_x, weights, has_t }
    }

    pub fn d(&self) -> usize {
        self.weights.dim()
    }

    pub fn slots(&self) -> usize {
        self.n_x + self.d() + usize::from(self.has_t)
    }

    pub fn x(&self, i: usize) -> usize {
        assert!(i < self.n_x, "x index out of range");
        i
    }

    pub fn xi(&self, k: usize) -> usize {
        assert!(k < self.d(), "xi index out of range");
        self.n_x + k
    }

    pub fn t(&self) -> usize {
        assert!(self.has_t, "layout has no t slot");
        self.n_x + self.d()
    }

    /// The same layout with a `t` slot.
    pub fn with_t(&self) -> Layout {
        Layout { has_t: true, ..self.clone() }
    }

    /// The same layout without a `t` slot.
    pub fn without_t(&self) -> Layout {
        Layout { has_t: false, ..self.clone() }
    }

    /// Frequency block `xi`.
    pub fn frame(&self) -> Frame {
        Frame { offset: self.n_x, weights: self.weights.clone() }
    }

    /// Frequency block `(xi, t)` with weight one on `t`.
    pub fn extended_frame(&self) -> Frame {
        assert!(self.has_t, "extended frame needs a t slot");
        Frame { offset: self.n_x, weights: self.weights.extended().flatten() }
    }

    pub fn slot_name(&self, slot: usize) -> String {
        if slot < self.n_x {
            format!("x{}", slot + 1)
        } else if slot < self.n_x + self.d() {
            format!("xi{}", slot - self.n_x + 1)
        } else if self.has_t && slot == self.n_x + self.d() {
            "t".to_string()
        } else {
            format!("s{slot}")
        }
    }
}

/// A contiguous block of slots carrying a graded dilation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub offset: usize,
    pub weights: Weights,
}

impl Frame {
    pub fn dim(&self) -> usize {
        self.weights.dim()
    }

    pub fn contains(&self, slot: usize) -> bool {
        slot >= self.offset && slot < self.offset + self.dim()
    }

    pub fn weight(&self, slot: usize) -> Option<u32> {
        self.contains(slot).then(|| self.weights.rho()[slot - self.offset])
    }
}

#[derive(Debug)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(SymbolExpr, SymbolExpr),
    Mul(SymbolExpr, SymbolExpr),
    /// Quotient; the denominator must not vanish.
    Div(SymbolExpr, SymbolExpr),
    Neg(SymbolExpr),
    Powi(SymbolExpr, i32),
    /// Real power of a strictly positive base.
    Powf(SymbolExpr, f64),
    Exp(SymbolExpr),
    /// `exp(-1/r)` for `r > 0`, else `0`.
    Glue(SymbolExpr),
    /// `cutoff * body`, defined as `0` wherever the cutoff vanishes so the body
    /// is never evaluated there.
    Guard(SymbolExpr, SymbolExpr),
    /// `near` where `|test| < threshold`, `far` otherwise.
    Branch { test: SymbolExpr, threshold: f64, near: SymbolExpr, far: SymbolExpr },
    /// `inner(args[0], ..., args[k-1])`, the inner expression reading its own slots.
    Compose(SymbolExpr, Arc<[SymbolExpr]>),
}

/// Shared handle to an expression node.
#[derive(Clone)]
pub struct SymbolExpr(Arc<Node>);

pub(crate) fn key(e: &SymbolExpr) -> usize {
    Arc::as_ptr(&e.0) as usize
}

impl SymbolExpr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn ptr_eq(&self, other: &SymbolExpr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    fn wrap(n: Node) -> Self {
        SymbolExpr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(slot: usize) -> Self {
        Self::wrap(Node::Var(slot))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(&self, o: &SymbolExpr) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Self::constant(a + b),
            (Some(a), _) if a == 0.0 => o.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Self::wrap(Node::Add(self.clone(), o.clone())),
        }
    }

    pub fn sub(&self, o: &SymbolExpr) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &SymbolExpr) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), Some(b)) => Self::constant(a * b),
            (Some(a), _) | (_, Some(a)) if a == 0.0 => Self::zero(),
            (Some(a), _) if a == 1.0 => o.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => o.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            (None, Some(_)) => Self::wrap(Node::Mul(o.clone(), self.clone())),
            _ => {
                if let (Some(a), Node::Mul(l, r)) = (self.as_const(), o.node()) {
                    if let Some(c) = l.as_const() {
                        return Self::constant(a * c).mul(r);
                    }
                }
                Self::wrap(Node::Mul(self.clone(), o.clone()))
            }
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::constant(c).mul(self)
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        match (n, self.as_const()) {
            (0, _) => Self::one(),
            (1, _) => self.clone(),
            (_, Some(c)) if !(c == 0.0 && n < 0) => Self::constant(c.powi(n)),
            _ => Self::wrap(Node::Powi(self.clone(), n)),
        }
    }

    /// Reciprocal as an integer power.
    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    pub fn div(&self, o: &SymbolExpr) -> Self {
        match (self.as_const(), o.as_const()) {
            (Some(a), _) if a == 0.0 => Self::zero(),
            (_, Some(b)) if b != 0.0 => self.scale(1.0 / b),
            _ => Self::wrap(Node::Div(self.clone(), o.clone())),
        }
    }

    /// Real power; the base must be strictly positive wherever it is evaluated.
    pub fn powf(&self, p: f64) -> Self {
        if p == 0.0 {
            return Self::one();
        }
        if p == 1.0 {
            return self.clone();
        }
        match self.as_const() {
            Some(c) if c > 0.0 => Self::constant(c.powf(p)),
            _ => Self::wrap(Node::Powf(self.clone(), p)),
        }
    }

    pub fn exp(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(c.exp()),
            None => Self::wrap(Node::Exp(self.clone())),
        }
    }

    pub fn glue(&self) -> Self {
        match self.as_const() {
            Some(c) => Self::constant(glue_value(c)),
            None => Self::wrap(Node::Glue(self.clone())),
        }
    }

    /// `cutoff * body`, zero wherever the cutoff is zero.
    pub fn guard(cutoff: &SymbolExpr, body: &SymbolExpr) -> Self {
        if cutoff.is_zero() || body.is_zero() {
            return Self::zero();
        }
        if let Some(c) = cutoff.as_const() {
            return body.scale(c);
        }
        Self::wrap(Node::Guard(cutoff.clone(), body.clone()))
    }

    pub fn branch(test: &SymbolExpr, threshold: f64, near: &SymbolExpr, far: &SymbolExpr) -> Self {
        if let Some(v) = test.as_const() {
            return if v.abs() < threshold { near.clone() } else { far.clone() };
        }
        if near.ptr_eq(far) {
            return near.clone();
        }
        if let (Some(a), Some(b)) = (near.as_const(), far.as_const()) {
            if a == b {
                return near.clone();
            }
        }
        Self::wrap(Node::Branch {
            test: test.clone(),
            threshold,
            near: near.clone(),
            far: far.clone(),
        })
    }

    /// Substitutes `args[i]` for slot `i` of `self`.
    pub fn compose(&self, args: &[SymbolExpr]) -> Self {
        match self.node() {
            Node::Const(_) => return self.clone(),
            Node::Var(i) if *i < args.len() => return args[*i].clone(),
            _ => {}
        }
        let identity = args
            .iter()
            .enumerate()
            .all(|(i, a)| matches!(a.node(), Node::Var(j) if *j == i));
        if identity && self.max_slot().is_none_or(|m| m < args.len()) {
            return self.clone();
        }
        Self::wrap(Node::Compose(self.clone(), args.to_vec().into()))
    }

    pub fn sum<I: IntoIterator<Item = SymbolExpr>>(items: I) -> Self {
        items.into_iter().fold(Self::zero(), |acc, e| acc.add(&e))
    }

    pub fn product<I: IntoIterator<Item = SymbolExpr>>(items: I) -> Self {
        items.into_iter().fold(Self::one(), |acc, e| acc.mul(&e))
    }

    /// Largest slot index read at the root level, if any.
    pub fn max_slot(&self) -> Option<usize> {
        fn go(e: &SymbolExpr, memo: &mut HashMap<usize, Option<usize>>) -> Option<usize> {
            if let Some(v) = memo.get(&key(e)) {
                return *v;
            }
            let v = match e.node() {
                Node::Const(_) => None,
                Node::Var(i) => Some(*i),
                Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Guard(a, b) => go(a, memo).max(go(b, memo)),
                Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Exp(a) | Node::Glue(a) => {
                    go(a, memo)
                }
                Node::Branch { test, near, far, .. } => {
                    go(test, memo).max(go(near, memo)).max(go(far, memo))
                }
                Node::Compose(_, args) => args.iter().map(|a| go(a, memo)).max().flatten(),
            };
            memo.insert(key(e), v);
            v
        }
        go(self, &mut HashMap::new())
    }

    /// Root-level slots the expression reads.
    pub fn free_slots(&self) -> Vec<usize> {
        fn go(e: &SymbolExpr, memo: &mut HashMap<usize, Vec<usize>>) -> Vec<usize> {
            if let Some(v) = memo.get(&key(e)) {
                return v.clone();
            }
            let mut v = match e.node() {
                Node::Const(_) => vec![],
                Node::Var(i) => vec![*i],
                Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Guard(a, b) => {
                    let mut v = go(a, memo);
                    v.extend(go(b, memo));
                    v
                }
                Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Exp(a) | Node::Glue(a) => {
                    go(a, memo)
                }
                Node::Branch { test, near, far, .. } => {
                    let mut v = go(test, memo);
                    v.extend(go(near, memo));
                    v.extend(go(far, memo));
                    v
                }
                Node::Compose(inner, args) => {
                    let used = go(inner, &mut HashMap::new());
                    let mut v = Vec::new();
                    for i in used {
                        if let Some(a) = args.get(i) {
                            v.extend(go(a, memo));
                        }
                    }
                    v
                }
            };
            v.sort_unstable();
            v.dedup();
            memo.insert(key(e), v.clone());
            v
        }
        go(self, &mut HashMap::new())
    }

    pub fn depends_on(&self, slot: usize) -> bool {
        self.free_slots().contains(&slot)
    }

    /// Number of distinct nodes.
    pub fn dag_size(&self) -> usize {
        fn go(e: &SymbolExpr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(key(e)) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Var(_) => {}
                Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Guard(a, b) => {
                    go(a, seen);
                    go(b, seen);
                }
                Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Exp(a) | Node::Glue(a) => {
                    go(a, seen)
                }
                Node::Branch { test, near, far, .. } => {
                    go(test, seen);
                    go(near, seen);
                    go(far, seen);
                }
                Node::Compose(inner, args) => {
                    go(inner, seen);
                    for a in args.iter() {
                        go(a, seen);
                    }
                }
            }
        }
        let mut seen = std::collections::HashSet::new();
        go(self, &mut seen);
        seen.len()
    }

    /// Size of the expression written out as a tree, saturating at `u64::MAX`.
    pub fn tree_size(&self) -> u64 {
        fn go(e: &SymbolExpr, memo: &mut HashMap<usize, u64>) -> u64 {
            if let Some(v) = memo.get(&key(e)) {
                return *v;
            }
            let v = 1u64.saturating_add(match e.node() {
                Node::Const(_) | Node::Var(_) => 0,
                Node::Add(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Guard(a, b) => {
                    go(a, memo).saturating_add(go(b, memo))
                }
                Node::Neg(a) | Node::Powi(a, _) | Node::Powf(a, _) | Node::Exp(a) | Node::Glue(a) => {
                    go(a, memo)
                }
                Node::Branch { test, near, far, .. } => go(test, memo)
                    .saturating_add(go(near, memo))
                    .saturating_add(go(far, memo)),
                Node::Compose(inner, args) => args
                    .iter()
                    .fold(go(inner, memo), |acc, a| acc.saturating_add(go(a, memo))),
            });
            memo.insert(key(e), v);
            v
        }
        go(self, &mut HashMap::new())
    }

    /// Replaces root-level slot `slot` by the constant `value`, folding branches
    /// whose test becomes constant.
    pub fn restrict(&self, slot: usize, value: f64) -> SymbolExpr {
        fn go(e: &SymbolExpr, slot: usize, value: f64, memo: &mut HashMap<usize, SymbolExpr>) -> SymbolExpr {
            if let Some(v) = memo.get(&key(e)) {
                return v.clone();
            }
            let r = match e.node() {
                Node::Const(_) => e.clone(),
                Node::Var(i) => {
                    if *i == slot {
                        SymbolExpr::constant(value)
                    } else {
                        e.clone()
                    }
                }
                Node::Add(a, b) => go(a, slot, value, memo).add(&go(b, slot, value, memo)),
                Node::Mul(a, b) => go(a, slot, value, memo).mul(&go(b, slot, value, memo)),
                Node::Div(a, b) => go(a, slot, value, memo).div(&go(b, slot, value, memo)),
                Node::Guard(a, b) => SymbolExpr::guard(&go(a, slot, value, memo), &go(b, slot, value, memo)),
                Node::Neg(a) => go(a, slot, value, memo).neg(),
                Node::Powi(a, n) => go(a, slot, value, memo).powi(*n),
                Node::Powf(a, p) => go(a, slot, value, memo).powf(*p),
                Node::Exp(a) => go(a, slot, value, memo).exp(),
                Node::Glue(a) => go(a, slot, value, memo).glue(),
                Node::Branch { test, threshold, near, far } => {
                    let t = go(test, slot, value, memo);
                    if let Some(v) = t.as_const() {
                        if v.abs() < *threshold {
                            go(near, slot, value, memo)
                        } else {
                            go(far, slot, value, memo)
                        }
                    } else {
                        SymbolExpr::branch(&t, *threshold, &go(near, slot, value, memo), &go(far, slot, value, memo))
                    }
                }
                Node::Compose(inner, args) => {
                    let new_args: Vec<SymbolExpr> = args.iter().map(|a| go(a, slot, value, memo)).collect();
                    // Constant arguments are pushed inside so branches on them fold too.
                    let mut inner_r = inner.clone();
                    for (i, a) in new_args.iter().enumerate() {
                        if let Some(c) = a.as_const() {
                            inner_r = inner_r.restrict(i, c);
                        }
                    }
                    inner_r.compose(&new_args)
                }
            };
            memo.insert(key(e), r.clone());
            r
        }
        go(self, slot, value, &mut HashMap::new())
    }

    /// Writes the expression in the prefix DSL using the layout's variable names.
    pub fn to_dsl(&self, layout: &Layout) -> String {
        let mut s = String::new();
        write_dsl(self, &|i| layout.slot_name(i), &mut s, usize::MAX);
        s
    }

    /// DSL text truncated to roughly `limit` characters.
    pub fn describe(&self, limit: usize) -> String {
        let mut s = String::new();
        write_dsl(self, &|i| format!("s{i}"), &mut s, limit);
        if s.len() > limit {
            s.truncate(limit);
            s.push_str("...");
        }
        s
    }
}

pub(crate) fn glue_value(r: f64) -> f64 {
    if r > 0.0 {
        (-1.0 / r).exp()
    } else {
        0.0
    }
}

fn fmt_num(c: f64) -> String {
    if c.fract() == 0.0 && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c:?}")
    }
}

fn write_dsl(e: &SymbolExpr, name: &dyn Fn(usize) -> String, out: &mut String, limit: usize) {
    if out.len() > limit {
        return;
    }
    match e.node() {
        Node::Const(c) => out.push_str(&fmt_num(*c)),
        Node::Var(i) => out.push_str(&name(*i)),
        Node::Add(a, b) => bin("+", a, b, name, out, limit),
        Node::Mul(a, b) => bin("*", a, b, name, out, limit),
        Node::Div(a, b) => bin("/", a, b, name, out, limit),
        Node::Guard(a, b) => bin("guard", a, b, name, out, limit),
        Node::Neg(a) => un("-", a, name, out, limit),
        Node::Exp(a) => un("exp", a, name, out, limit),
        Node::Glue(a) => un("glue", a, name, out, limit),
        Node::Powi(a, n) => {
            out.push_str("(^ ");
            write_dsl(a, name, out, limit);
            out.push_str(&format!(" {n})"));
        }
        Node::Powf(a, p) => {
            out.push_str("(pow ");
            write_dsl(a, name, out, limit);
            out.push_str(&format!(" {})", fmt_num(*p)));
        }
        Node::Branch { test, threshold, near, far } => {
            out.push_str("(branch ");
            write_dsl(test, name, out, limit);
            out.push_str(&format!(" {} ", fmt_num(*threshold)));
            write_dsl(near, name, out, limit);
            out.push(' ');
            write_dsl(far, name, out, limit);
            out.push(')');
        }
        Node::Compose(inner, args) => {
            out.push_str("(compose ");
            write_dsl(inner, name, out, limit);
            for a in args.iter() {
                out.push(' ');
                write_dsl(a, name, out, limit);
            }
            out.push(')');
        }
    }
}

fn bin(op: &str, a: &SymbolExpr, b: &SymbolExpr, name: &dyn Fn(usize) -> String, out: &mut String, limit: usize) {
    out.push('(');
    out.push_str(op);
    out.push(' ');
    write_dsl(a, name, out, limit);
    out.push(' ');
    write_dsl(b, name, out, limit);
    out.push(')');
}

fn un(op: &str, a: &SymbolExpr, name: &dyn Fn(usize) -> String, out: &mut String, limit: usize) {
    out.push('(');
    out.push_str(op);
    out.push(' ');
    write_dsl(a, name, out, limit);
    out.push(')');
}

impl fmt::Debug for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(400))
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(usize::MAX / 2))
    }
}

macro_rules! impl_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl std::ops::$tr<SymbolExpr> for SymbolExpr {
            type Output = SymbolExpr;
            fn $m(self, o: SymbolExpr) -> SymbolExpr {
                SymbolExpr::$f(&self, &o)
            }
        }
        impl std::ops::$tr<&SymbolExpr> for &SymbolExpr {
            type Output = SymbolExpr;
            fn $m(self, o: &SymbolExpr) -> SymbolExpr {
                SymbolExpr::$f(self, o)
            }
        }
        impl std::ops::$tr<f64> for SymbolExpr {
            type Output = SymbolExpr;
            fn $m(self, o: f64) -> SymbolExpr {
                SymbolExpr::$f(&self, &SymbolExpr::constant(o))
            }
        }
        impl std::ops::$tr<SymbolExpr> for f64 {
            type Output = SymbolExpr;
            fn $m(self, o: SymbolExpr) -> SymbolExpr {
                SymbolExpr::$f(&SymbolExpr::constant(self), &o)
            }
        }
    };
}

impl_binop!(Add, add, add);
impl_binop!(Sub, sub, sub);
impl_binop!(Mul, mul, mul);
impl_binop!(Div, div, div);

impl std::ops::Neg for SymbolExpr {
    type Output = SymbolExpr;
    fn neg(self) -> SymbolExpr {
        SymbolExpr::neg(&self)
    }
}

impl std::ops::Neg for &SymbolExpr {
    type Output = SymbolExpr;
    fn neg(self) -> SymbolExpr {
        SymbolExpr::neg(self)
    }
}
