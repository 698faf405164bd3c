//! Exponential charts of the tangent groupoid, the `sigma` symbol change and the zoom actions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::model::{heis_dilate, HeisenbergModel};
use super::{HeisenbergError, Result};

/// Chart coordinates `(y, v, t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartPoint {
    pub y: Vec<f64>,
    pub v: Vec<f64>,
    pub t: f64,
}

/// A point of the tangent groupoid: a pair `(y, x)` at `t != 0`, or an
/// osculating-group element `xi` over `x` at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum GroupoidPoint {
    Pair { y: Vec<f64>, x: Vec<f64>, t: f64 },
    Osculating { x: Vec<f64>, xi: Vec<f64> },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(y, exp(delta_t(-v).X) y, t)` for `t != 0` and `(y, v, 0)` at `t = 0`.
pub fn exp_chart(m: &HeisenbergModel, y: &[f64], v: &[f64], t: f64) -> GroupoidPoint {
    if t == 0.0 {
        return GroupoidPoint::Osculating { x: y.to_vec(), xi: v.to_vec() };
    }
    let c = m.half_b(y);
    let mut x: Vec<f64> = y.iter().zip(v).map(|(yk, vk)| yk - vk * t).collect();
    x[0] = y[0] - dot(&c, &v[1..]) * t - v[0] * t * t;
    GroupoidPoint::Pair { y: y.to_vec(), x, t }
}

/// Inverse of [`exp_chart`].
pub fn exp_chart_inverse(m: &HeisenbergModel, p: &GroupoidPoint) -> ChartPoint {
    match p {
        GroupoidPoint::Osculating { x, xi } => ChartPoint { y: x.clone(), v: xi.clone(), t: 0.0 },
        GroupoidPoint::Pair { y, x, t } => {
            let c = m.half_b(y);
            let mut v: Vec<f64> = y.iter().zip(x).map(|(yk, xk)| (yk - xk) / t).collect();
            v[0] = (y[0] - x[0] - t * dot(&c, &v[1..])) / (t * t);
            ChartPoint { y: y.clone(), v, t: *t }
        }
    }
}

/// Time-one flow of `sum_k w_k X_k` from `y` by classical Runge-Kutta.
pub fn flow_rk4(m: &HeisenbergModel, y: &[f64], w: &[f64], steps: usize) -> Vec<f64> {
    let field = |p: &[f64]| -> Vec<f64> {
        let mut out = w.to_vec();
        out[0] += dot(&m.half_b(p), &w[1..]);
        out
    };
    let h = 1.0 / steps as f64;
    let mut p = y.to_vec();
    let axpy = |p: &[f64], k: &[f64], a: f64| -> Vec<f64> { p.iter().zip(k).map(|(x, d)| x + a * d).collect() };
    for _ in 0..steps {
        let k1 = field(&p);
        let k2 = field(&axpy(&p, &k1, h / 2.0));
        let k3 = field(&axpy(&p, &k2, h / 2.0));
        let k4 = field(&axpy(&p, &k3, h));
        for i in 0..p.len() {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    p
}

/// `phi_y(v) = (-v_0 - sum_j c_j(y) v_j, -v_1, ..., -v_d)`.
pub fn phi_y(m: &HeisenbergModel, y: &[f64], v: &[f64]) -> Vec<f64> {
    let c = m.half_b(y);
    let mut out: Vec<f64> = v.iter().map(|x| -x).collect();
    out[0] -= dot(&c, &v[1..]);
    out
}

pub fn phi_y_matrix(m: &HeisenbergModel, y: &[f64]) -> DMatrix<f64> {
    let n = m.dim();
    let c = m.half_b(y);
    DMatrix::from_fn(n, n, |i, k| {
        if i == k {
            -1.0
        } else if i == 0 {
            -c[k - 1]
        } else {
            0.0
        }
    })
}

/// `sigma_0 = eta_0`, `sigma_j = eta_j + c_j(x) eta_0`.
pub fn sigma(m: &HeisenbergModel, x: &[f64], eta: &[f64]) -> Vec<f64> {
    let c = m.half_b(x);
    let mut out = eta.to_vec();
    for j in 1..out.len() {
        out[j] += c[j - 1] * eta[0];
    }
    out
}

/// Inverse of `sigma` in the frequency variable.
pub fn sigma_tilde(m: &HeisenbergModel, x: &[f64], eta: &[f64]) -> Vec<f64> {
    let c = m.half_b(x);
    let mut out = eta.to_vec();
    for j in 1..out.len() {
        out[j] -= c[j - 1] * eta[0];
    }
    out
}

/// Max-norm of `(phi_y^{-1})^T eta - sigma~(y, -eta)`, with the inverse by LU.
pub fn transpose_inverse_residual(m: &HeisenbergModel, y: &[f64], eta: &[f64]) -> Result<f64> {
    let inv = phi_y_matrix(m, y)
        .lu()
        .try_inverse()
        .ok_or_else(|| HeisenbergError::InvalidModel("phi_y is singular".into()))?;
    let lhs = inv.transpose() * DVector::from_column_slice(eta);
    let neg: Vec<f64> = eta.iter().map(|e| -e).collect();
    let rhs = sigma_tilde(m, y, &neg);
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

/// Zoom action on the groupoid: `t -> t/s` on pairs, `xi -> delta_s xi` at `t = 0`.
pub fn alpha(s: f64, p: &GroupoidPoint) -> GroupoidPoint {
    match p {
        GroupoidPoint::Pair { y, x, t } => GroupoidPoint::Pair { y: y.clone(), x: x.clone(), t: t / s },
        GroupoidPoint::Osculating { x, xi } => GroupoidPoint::Osculating { x: x.clone(), xi: heis_dilate(s, xi) },
    }
}

/// `(y, delta_s v, t / s)`.
pub fn alpha_tilde(s: f64, p: &ChartPoint) -> ChartPoint {
    ChartPoint { y: p.y.clone(), v: heis_dilate(s, &p.v), t: p.t / s }
}

/// `(y, delta_s v, s t)`.
pub fn beta(s: f64, p: &ChartPoint) -> ChartPoint {
    ChartPoint { y: p.y.clone(), v: heis_dilate(s, &p.v), t: s * p.t }
}
