use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{HeisenbergError, Result};
use crate::grading::Weights;
use crate::symbol::diff::derivative;
use crate::symbol::{Layout, SymbolExpr, Tape};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    d: usize,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
}

/// `R^{d+1}` with the nilpotent group law determined by an antisymmetric `B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub struct HeisenbergModel {
    d: usize,
    b: DMatrix<f64>,
}

impl TryFrom<ModelFile> for HeisenbergModel {
    type Error = HeisenbergError;

    fn try_from(f: ModelFile) -> Result<Self> {
        if f.b.len() != f.d || f.b.iter().any(|row| row.len() != f.d) {
            return Err(HeisenbergError::InvalidModel(format!("B must be {0}x{0}", f.d)));
        }
        HeisenbergModel::new(DMatrix::from_fn(f.d, f.d, |j, k| f.b[j][k]))
    }
}

impl From<HeisenbergModel> for ModelFile {
    fn from(m: HeisenbergModel) -> Self {
        ModelFile { d: m.d, b: (0..m.d).map(|j| (0..m.d).map(|k| m.b[(j, k)]).collect()).collect() }
    }
}

impl HeisenbergModel {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        let d = b.nrows();
        if d == 0 || b.ncols() != d {
            return Err(HeisenbergError::InvalidModel(format!("B must be square and nonempty, got {}x{}", d, b.ncols())));
        }
        for j in 0..d {
            for k in 0..d {
                let sum = b[(j, k)] + b[(k, j)];
                if sum != 0.0 || !b[(j, k)].is_finite() {
                    return Err(HeisenbergError::NotAntisymmetric { j, k, sum });
                }
            }
        }
        Ok(Self { d, b })
    }

    /// `B = [[0, -I_n], [I_n, 0]]`, the Heisenberg group `H_n`.
    pub fn heisenberg(n: usize) -> Self {
        let d = 2 * n;
        let b = DMatrix::from_fn(d, d, |j, k| {
            if k == j + n {
                -1.0
            } else if j == k + n {
                1.0
            } else {
                0.0
            }
        });
        Self { d, b }
    }

    /// `B = 0`: the abelian group `R^{d+1}`.
    pub fn abelian(d: usize) -> Self {
        Self { d, b: DMatrix::zeros(d, d) }
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(s).map_err(|e| e.to_string())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d + 1
    }

    /// `b_{jk}` with `1 <= j, k <= d`.
    pub fn b(&self, j: usize, k: usize) -> f64 {
        self.b[(j - 1, k - 1)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn weights(&self) -> Weights {
        Weights::heisenberg(self.d)
    }

    /// Layout with position slots `x_0..x_d` followed by frequency slots `xi_0..xi_d`.
    pub fn layout(&self) -> Layout {
        Layout::new(self.dim(), self.weights(), false)
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(HeisenbergError::Dimension { expected: self.dim(), got: v.len() });
        }
        Ok(())
    }

    /// `c_j(y) = 1/2 sum_k b_{jk} y_k` for `j = 1..d` (index `j - 1`).
    pub fn half_b(&self, y: &[f64]) -> Vec<f64> {
        (1..=self.d).map(|j| 0.5 * (1..=self.d).map(|k| self.b(j, k) * y[k]).sum::<f64>()).collect()
    }

    /// `(x.x')_0 = x_0 + x'_0 + 1/2 sum_{j,k} b_{jk} x'_j x_k`, other slots add.
    pub fn group_mul(&self, x: &[f64], xp: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        self.check(xp)?;
        let mut out: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a + b).collect();
        let c = self.half_b(x);
        out[0] += (1..=self.d).map(|j| c[j - 1] * xp[j]).sum::<f64>();
        Ok(out)
    }

    pub fn group_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x.iter().map(|v| -v).collect())
    }

    /// `(s^2 v_0, s v_1, ..., s v_d)`.
    pub fn dilate(&self, s: f64, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        if !(s > 0.0) {
            return Err(HeisenbergError::InvalidModel(format!("dilation factor must be positive, got {s}")));
        }
        Ok(heis_dilate(s, v))
    }

    /// `X_j f` as an expression in the position slots `0..=d`.
    pub fn field(&self, j: usize, f: &SymbolExpr) -> SymbolExpr {
        let d0 = derivative(f, 0);
        if j == 0 {
            return d0;
        }
        let coeff = SymbolExpr::sum((1..=self.d).filter(|&k| self.b(j, k) != 0.0).map(|k| {
            SymbolExpr::var(k).scale(0.5 * self.b(j, k))
        }));
        derivative(f, j).add(&coeff.mul(&d0))
    }

    /// `(X_j f)(x)`.
    pub fn field_apply(&self, j: usize, f: &SymbolExpr, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        Ok(Tape::compile(&self.field(j, f))?.eval(x)?)
    }

    /// `([X_i, X_k] f)(x)`.
    pub fn commutator_apply(&self, i: usize, k: usize, f: &SymbolExpr, x: &[f64]) -> Result<f64> {
        let ik = self.field(i, &self.field(k, f));
        let ki = self.field(k, &self.field(i, f));
        self.check(x)?;
        Ok(Tape::compile(&ik.sub(&ki))?.eval(x)?)
    }

    /// `f o L_y` with `L_y(x) = y.x`.
    pub fn left_translate(&self, f: &SymbolExpr, y: &[f64]) -> SymbolExpr {
        let c = self.half_b(y);
        let mut args: Vec<SymbolExpr> = (0..self.dim()).map(|k| SymbolExpr::var(k).add(&SymbolExpr::constant(y[k]))).collect();
        let shear = SymbolExpr::sum((1..=self.d).filter(|&j| c[j - 1] != 0.0).map(|j| SymbolExpr::var(j).scale(c[j - 1])));
        args[0] = args[0].add(&shear);
        f.compose(&args)
    }

    /// `sigma(x, xi)` as expressions over `layout` (position slots `0..=d`, then frequencies).
    pub fn sigma_exprs(&self, layout: &Layout) -> Vec<SymbolExpr> {
        let xi0 = SymbolExpr::var(layout.xi(0));
        (0..self.dim())
            .map(|j| {
                let xi = SymbolExpr::var(layout.xi(j));
                if j == 0 {
                    return xi;
                }
                let c = SymbolExpr::sum(
                    (1..=self.d).filter(|&k| self.b(j, k) != 0.0).map(|k| SymbolExpr::var(k).scale(0.5 * self.b(j, k))),
                );
                xi.add(&c.mul(&xi0))
            })
            .collect()
    }

    /// `f(x, sigma(x, xi), ...)`: the frequency slots of `f` read through `sigma`.
    pub fn sigma_pullback(&self, f: &SymbolExpr, layout: &Layout) -> SymbolExpr {
        let mut args: Vec<SymbolExpr> = (0..layout.slots()).map(SymbolExpr::var).collect();
        for (j, s) in self.sigma_exprs(layout).into_iter().enumerate() {
            args[layout.xi(j)] = s;
        }
        f.compose(&args)
    }
}

pub(crate) fn heis_dilate(s: f64, v: &[f64]) -> Vec<f64> {
    v.iter().enumerate().map(|(k, &x)| if k == 0 { s * s * x } else { s * x }).collect()
}
