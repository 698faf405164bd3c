//! Prefix text format for symbol expressions.
//!
//! ```text
//! (* (exp (- (qnorm 2))) (+ 1 (^ xi1 2)))   ; comments run to end of line
//! ```
//!
//! Atoms are numbers and the variable names of a [`Layout`] (`x1..`, `xi1..`,
//! `t`, or raw slots `s0..`). Forms: `+ * - / ^ pow exp glue guard branch
//! compose`, plus `(qnorm p)` for the smooth quasi-norm power `|xi|^p`,
//! `(phi)` for the cutoff vanishing near the origin, and `(step r)`.

use super::cutoffs;
use super::expr::{Layout, SymbolExpr};
use super::{Result, SymbolError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
enum Sexp {
    Atom(String, usize, usize),
    List(Vec<Sexp>, usize, usize),
}

fn err(line: usize, column: usize, message: impl Into<String>) -> SymbolError {
    SymbolError::Parse { line, column, message: message.into() }
}

fn tokenize(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (li, line) in src.lines().enumerate() {
        let line = line.split(';').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let column = i + 1;
            match c {
                '(' => {
                    out.push(Token { tok: Tok::Open, line: li + 1, column });
                    i += 1;
                }
                ')' => {
                    out.push(Token { tok: Tok::Close, line: li + 1, column });
                    i += 1;
                }
                c if c.is_whitespace() => i += 1,
                _ => {
                    let start = i;
                    while i < chars.len() && !chars[i].is_whitespace() && chars[i] != '(' && chars[i] != ')' {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    out.push(Token { tok: Tok::Atom(s), line: li + 1, column });
                }
            }
        }
    }
    out
}

fn read(tokens: &[Token], pos: &mut usize) -> Result<Sexp> {
    let Some(t) = tokens.get(*pos) else {
        let (l, c) = tokens.last().map_or((1, 1), |t| (t.line, t.column));
        return Err(err(l, c, "unexpected end of input"));
    };
    *pos += 1;
    match &t.tok {
        Tok::Atom(s) => Ok(Sexp::Atom(s.clone(), t.line, t.column)),
        Tok::Close => Err(err(t.line, t.column, "unexpected ')'")),
        Tok::Open => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(err(t.line, t.column, "unclosed '('")),
                    Some(Token { tok: Tok::Close, .. }) => {
                        *pos += 1;
                        return Ok(Sexp::List(items, t.line, t.column));
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                }
            }
        }
    }
}

/// Parses DSL text against a variable layout.
pub fn parse(src: &str, layout: &Layout) -> Result<SymbolExpr> {
    let tokens = tokenize(src);
    if tokens.is_empty() {
        return Err(err(1, 1, "empty expression"));
    }
    let mut pos = 0;
    let sexp = read(&tokens, &mut pos)?;
    if let Some(t) = tokens.get(pos) {
        return Err(err(t.line, t.column, "trailing input after expression"));
    }
    build(&sexp, layout)
}

fn number(s: &str, line: usize, column: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| err(line, column, format!("expected a number, found `{s}`")))
}

fn variable(name: &str, layout: &Layout) -> Option<usize> {
    if name == "t" && layout.has_t {
        return Some(layout.t());
    }
    if let Some(k) = name.strip_prefix("xi").and_then(|r| r.parse::<usize>().ok()) {
        return (k >= 1 && k <= layout.d()).then(|| layout.xi(k - 1));
    }
    if let Some(k) = name.strip_prefix('x').and_then(|r| r.parse::<usize>().ok()) {
        return (k >= 1 && k <= layout.n_x).then(|| layout.x(k - 1));
    }
    if let Some(k) = name.strip_prefix('s').and_then(|r| r.parse::<usize>().ok()) {
        return Some(k);
    }
    None
}

fn build(s: &Sexp, layout: &Layout) -> Result<SymbolExpr> {
    match s {
        Sexp::Atom(a, l, c) => {
            if let Some(slot) = variable(a, layout) {
                Ok(SymbolExpr::var(slot))
            } else if a == "pi" {
                Ok(SymbolExpr::constant(std::f64::consts::PI))
            } else {
                a.parse::<f64>()
                    .map(SymbolExpr::constant)
                    .map_err(|_| err(*l, *c, format!("unknown symbol `{a}`")))
            }
        }
        Sexp::List(items, l, c) => {
            let (l, c) = (*l, *c);
            let Some(Sexp::Atom(op, _, _)) = items.first() else {
                return Err(err(l, c, "expected an operator name"));
            };
            let args = &items[1..];
            let arity = |n: usize| -> Result<()> {
                if args.len() == n {
                    Ok(())
                } else {
                    Err(err(l, c, format!("`{op}` takes {n} arguments, found {}", args.len())))
                }
            };
            let sub = |i: usize| build(&args[i], layout);
            let num = |i: usize| -> Result<f64> {
                match &args[i] {
                    Sexp::Atom(a, l, c) => number(a, *l, *c),
                    Sexp::List(_, l, c) => Err(err(*l, *c, "expected a numeric literal")),
                }
            };
            match op.as_str() {
                "+" | "*" => {
                    if args.is_empty() {
                        return Err(err(l, c, format!("`{op}` needs at least one argument")));
                    }
                    let parts = (0..args.len()).map(sub).collect::<Result<Vec<_>>>()?;
                    Ok(if op == "+" { SymbolExpr::sum(parts) } else { SymbolExpr::product(parts) })
                }
                "-" => match args.len() {
                    1 => Ok(sub(0)?.neg()),
                    2 => Ok(sub(0)?.sub(&sub(1)?)),
                    n => Err(err(l, c, format!("`-` takes 1 or 2 arguments, found {n}"))),
                },
                "/" => {
                    arity(2)?;
                    Ok(sub(0)?.div(&sub(1)?))
                }
                "^" => {
                    arity(2)?;
                    let n = num(1)?;
                    if n.fract() != 0.0 || n.abs() > i32::MAX as f64 {
                        return Err(err(l, c, "`^` needs an integer exponent; use `pow` for real powers"));
                    }
                    Ok(sub(0)?.powi(n as i32))
                }
                "pow" => {
                    arity(2)?;
                    Ok(sub(0)?.powf(num(1)?))
                }
                "exp" => {
                    arity(1)?;
                    Ok(sub(0)?.exp())
                }
                "glue" => {
                    arity(1)?;
                    Ok(sub(0)?.glue())
                }
                "step" => {
                    arity(1)?;
                    Ok(cutoffs::step(&sub(0)?))
                }
                "guard" => {
                    arity(2)?;
                    Ok(SymbolExpr::guard(&sub(0)?, &sub(1)?))
                }
                "branch" => {
                    arity(4)?;
                    Ok(SymbolExpr::branch(&sub(0)?, num(1)?, &sub(2)?, &sub(3)?))
                }
                "compose" => {
                    if args.is_empty() {
                        return Err(err(l, c, "`compose` needs an inner expression"));
                    }
                    let inner = sub(0)?;
                    let rest = (1..args.len()).map(sub).collect::<Result<Vec<_>>>()?;
                    Ok(inner.compose(&rest))
                }
                "qnorm" => {
                    arity(1)?;
                    Ok(cutoffs::qnorm_pow(&layout.frame(), num(0)?))
                }
                "phi" => {
                    arity(0)?;
                    Ok(cutoffs::phi(&layout.frame()))
                }
                other => Err(err(l, c, format!("unknown operator `{other}`"))),
            }
        }
    }
}
