//! Compiled evaluation of expression DAGs.
//!
//! An expression compiles to a straight-line register program with forward
//! jumps for guards and branches. Every register carries a magnitude bound
//! next to its value, used to tell cancellation noise from genuine values.

use std::collections::HashMap;

use super::expr::{glue_value, key, Layout, Node, SymbolExpr};
use super::{Result, SymbolError};

#[derive(Debug, Clone)]
enum Instr {
    Const(f64),
    Load(usize),
    Add(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Powi(u32, i32),
    Powf(u32, f64),
    Exp(u32),
    Glue(u32),
    /// If `cond` is zero, write zero to `out` and continue at `resume`.
    SkipIfZero { cond: u32, out: u32, resume: u32 },
    GuardMul { cond: u32, body: u32 },
    /// If `|test| >= threshold`, continue at `far`.
    BranchFar { test: u32, threshold: f64, far: u32 },
    Store { out: u32, src: u32 },
    Jump(u32),
    Merge,
}

/// A compiled expression.
#[derive(Debug, Clone)]
pub struct Tape {
    instrs: Vec<Instr>,
    labels: HashMap<usize, SymbolExpr>,
    root: u32,
    arity: usize,
}

/// Reusable register storage for one evaluating thread.
#[derive(Debug, Clone)]
pub struct Workspace {
    val: Vec<f64>,
    mag: Vec<f64>,
}

struct Compiler {
    instrs: Vec<Instr>,
    labels: HashMap<usize, SymbolExpr>,
    scopes: Vec<HashMap<(usize, usize), u32>>,
    envs: Vec<Vec<u32>>,
    env_ids: HashMap<Vec<u32>, usize>,
    arity: usize,
}

impl Compiler {
    fn emit(&mut self, i: Instr) -> u32 {
        self.instrs.push(i);
        (self.instrs.len() - 1) as u32
    }

    fn lookup(&self, k: (usize, usize)) -> Option<u32> {
        self.scopes.iter().rev().find_map(|s| s.get(&k).copied())
    }

    fn scoped<F: FnOnce(&mut Self) -> Result<u32>>(&mut self, f: F) -> Result<u32> {
        self.scopes.push(HashMap::new());
        let r = f(self);
        self.scopes.pop();
        r
    }

    fn compile(&mut self, e: &SymbolExpr, env: usize) -> Result<u32> {
        let k = (key(e), env);
        if let Some(r) = self.lookup(k) {
            return Ok(r);
        }
        let r = match e.node() {
            Node::Const(c) => self.emit(Instr::Const(*c)),
            Node::Var(i) => {
                if env == 0 {
                    self.arity = self.arity.max(i + 1);
                    self.emit(Instr::Load(*i))
                } else {
                    match self.envs[env].get(*i) {
                        Some(r) => *r,
                        None => {
                            return Err(SymbolError::Arity {
                                expected: i + 1,
                                got: self.envs[env].len(),
                            })
                        }
                    }
                }
            }
            Node::Add(a, b) => {
                let (ra, rb) = (self.compile(a, env)?, self.compile(b, env)?);
                self.emit(Instr::Add(ra, rb))
            }
            Node::Mul(a, b) => {
                let (ra, rb) = (self.compile(a, env)?, self.compile(b, env)?);
                self.emit(Instr::Mul(ra, rb))
            }
            Node::Div(a, b) => {
                let (ra, rb) = (self.compile(a, env)?, self.compile(b, env)?);
                let r = self.emit(Instr::Div(ra, rb));
                self.labels.insert(r as usize, e.clone());
                r
            }
            Node::Neg(a) => {
                let ra = self.compile(a, env)?;
                self.emit(Instr::Neg(ra))
            }
            Node::Powi(a, n) => {
                let ra = self.compile(a, env)?;
                let r = self.emit(Instr::Powi(ra, *n));
                self.labels.insert(r as usize, e.clone());
                r
            }
            Node::Powf(a, p) => {
                let ra = self.compile(a, env)?;
                let r = self.emit(Instr::Powf(ra, *p));
                self.labels.insert(r as usize, e.clone());
                r
            }
            Node::Exp(a) => {
                let ra = self.compile(a, env)?;
                self.emit(Instr::Exp(ra))
            }
            Node::Glue(a) => {
                let ra = self.compile(a, env)?;
                self.emit(Instr::Glue(ra))
            }
            Node::Guard(c, b) => {
                let rc = self.compile(c, env)?;
                let skip = self.emit(Instr::SkipIfZero { cond: rc, out: 0, resume: 0 });
                let rb = self.scoped(|s| s.compile(b, env))?;
                let r = self.emit(Instr::GuardMul { cond: rc, body: rb });
                self.instrs[skip as usize] = Instr::SkipIfZero { cond: rc, out: r, resume: r + 1 };
                r
            }
            Node::Branch { test, threshold, near, far } => {
                let rt = self.compile(test, env)?;
                let jump_far = self.emit(Instr::BranchFar { test: rt, threshold: *threshold, far: 0 });
                let rn = self.scoped(|s| s.compile(near, env))?;
                let store_near = self.emit(Instr::Store { out: 0, src: rn });
                let skip_far = self.emit(Instr::Jump(0));
                let far_start = self.instrs.len() as u32;
                let rf = self.scoped(|s| s.compile(far, env))?;
                let store_far = self.emit(Instr::Store { out: 0, src: rf });
                let merge = self.emit(Instr::Merge);
                self.instrs[jump_far as usize] =
                    Instr::BranchFar { test: rt, threshold: *threshold, far: far_start };
                self.instrs[store_near as usize] = Instr::Store { out: merge, src: rn };
                self.instrs[skip_far as usize] = Instr::Jump(merge);
                self.instrs[store_far as usize] = Instr::Store { out: merge, src: rf };
                merge
            }
            Node::Compose(inner, args) => {
                let regs = args
                    .iter()
                    .map(|a| self.compile(a, env))
                    .collect::<Result<Vec<u32>>>()?;
                let id = match self.env_ids.get(&regs) {
                    Some(id) => *id,
                    None => {
                        self.envs.push(regs.clone());
                        let id = self.envs.len() - 1;
                        self.env_ids.insert(regs, id);
                        id
                    }
                };
                self.compile(inner, id)?
            }
        };
        self.scopes.last_mut().expect("scope stack").insert(k, r);
        Ok(r)
    }
}

impl Tape {
    pub fn compile(e: &SymbolExpr) -> Result<Tape> {
        let mut c = Compiler {
            instrs: Vec::new(),
            labels: HashMap::new(),
            scopes: vec![HashMap::new()],
            envs: vec![Vec::new()],
            env_ids: HashMap::new(),
            arity: 0,
        };
        let root = c.compile(e, 0)?;
        Ok(Tape { instrs: c.instrs, labels: c.labels, root, arity: c.arity })
    }

    /// Number of root-level slots read.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn workspace(&self) -> Workspace {
        Workspace { val: vec![0.0; self.instrs.len()], mag: vec![0.0; self.instrs.len()] }
    }

    pub fn eval(&self, pt: &[f64]) -> Result<f64> {
        self.eval_with(&mut self.workspace(), pt)
    }

    pub fn eval_with(&self, w: &mut Workspace, pt: &[f64]) -> Result<f64> {
        self.eval_scaled(w, pt).map(|(v, _)| v)
    }

    /// Value together with a magnitude bound of the intermediate terms.
    pub fn eval_scaled(&self, w: &mut Workspace, pt: &[f64]) -> Result<(f64, f64)> {
        if pt.len() < self.arity {
            return Err(SymbolError::Arity { expected: self.arity, got: pt.len() });
        }
        let (val, mag) = (&mut w.val, &mut w.mag);
        let mut pc = 0usize;
        let n = self.instrs.len();
        while pc < n {
            let (v, m) = match &self.instrs[pc] {
                Instr::Const(c) => (*c, c.abs()),
                Instr::Load(i) => (pt[*i], pt[*i].abs()),
                Instr::Add(a, b) => {
                    let (a, b) = (*a as usize, *b as usize);
                    (val[a] + val[b], mag[a] + mag[b])
                }
                Instr::Mul(a, b) => {
                    let (a, b) = (*a as usize, *b as usize);
                    (val[a] * val[b], mag[a] * mag[b])
                }
                Instr::Div(a, b) => {
                    let (a, b) = (*a as usize, *b as usize);
                    if val[b] == 0.0 {
                        return Err(self.domain(pc, "division by zero"));
                    }
                    (val[a] / val[b], mag[a] / val[b].abs())
                }
                Instr::Neg(a) => (-val[*a as usize], mag[*a as usize]),
                Instr::Powi(a, k) => {
                    let x = val[*a as usize];
                    if *k < 0 && x == 0.0 {
                        return Err(self.domain(pc, "negative power of zero"));
                    }
                    let v = x.powi(*k);
                    (v, v.abs())
                }
                Instr::Powf(a, p) => {
                    let x = val[*a as usize];
                    if !(x > 0.0) {
                        return Err(self.domain(pc, &format!("real power of non-positive base {x}")));
                    }
                    let v = x.powf(*p);
                    (v, v.abs())
                }
                Instr::Exp(a) => {
                    let v = val[*a as usize].exp();
                    (v, v)
                }
                Instr::Glue(a) => {
                    let v = glue_value(val[*a as usize]);
                    (v, v)
                }
                Instr::SkipIfZero { cond, out, resume } => {
                    if val[*cond as usize] == 0.0 {
                        val[*out as usize] = 0.0;
                        mag[*out as usize] = 0.0;
                        pc = *resume as usize;
                        continue;
                    }
                    pc += 1;
                    continue;
                }
                Instr::GuardMul { cond, body } => {
                    let (c, b) = (*cond as usize, *body as usize);
                    (val[c] * val[b], mag[c] * mag[b])
                }
                Instr::BranchFar { test, threshold, far } => {
                    if val[*test as usize].abs() >= *threshold {
                        pc = *far as usize;
                    } else {
                        pc += 1;
                    }
                    continue;
                }
                Instr::Store { out, src } => {
                    val[*out as usize] = val[*src as usize];
                    mag[*out as usize] = mag[*src as usize];
                    pc += 1;
                    continue;
                }
                Instr::Jump(t) => {
                    pc = *t as usize;
                    continue;
                }
                Instr::Merge => {
                    pc += 1;
                    continue;
                }
            };
            val[pc] = v;
            mag[pc] = m;
            pc += 1;
        }
        let r = self.root as usize;
        Ok((val[r], mag[r]))
    }

    fn domain(&self, pc: usize, detail: &str) -> SymbolError {
        let node = self
            .labels
            .get(&pc)
            .map(|e| e.describe(200))
            .unwrap_or_else(|| format!("instruction {pc}"));
        SymbolError::Domain { node, detail: detail.to_string() }
    }
}

/// Pointwise values of `e` at points laid out per `layout`.
pub fn evaluate(e: &SymbolExpr, layout: &Layout, pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let tape = Tape::compile(e)?;
    if tape.arity() > layout.slots() {
        return Err(SymbolError::Arity { expected: layout.slots(), got: tape.arity() });
    }
    let mut w = tape.workspace();
    pts.iter()
        .map(|p| {
            if p.len() != layout.slots() {
                return Err(SymbolError::Arity { expected: layout.slots(), got: p.len() });
            }
            tape.eval_with(&mut w, p)
        })
        .collect()
}
