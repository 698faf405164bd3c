//! Graded dilations and homogeneous quasi-norms.
//!
//! A weight tuple `rho = (rho_1, ..., rho_d)` of positive integers generates the
//! one-parameter family `delta_s(v)_k = s^{rho_k} v_k`. The extended family
//! appends a weight-one slot for the extension variable `t`.

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, GradingError>;

/// Positive integer weights of a graded dilation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Weights {
    rho: Vec<u32>,
}

impl Weights {
    pub fn new(rho: Vec<u32>) -> Result<Self> {
        if rho.is_empty() {
            return Err(GradingError::InvalidParameter("weights need d >= 1".into()));
        }
        if rho.contains(&0) {
            return Err(GradingError::InvalidParameter(format!(
                "every weight must be >= 1, got {rho:?}"
            )));
        }
        Ok(Self { rho })
    }

    /// All weights equal to one.
    pub fn isotropic(d: usize) -> Self {
        Self { rho: vec![1; d.max(1)] }
    }

    /// Weights `(2, 1, ..., 1)` of the Heisenberg dilation on `R^{d+1}`.
    pub fn heisenberg(d: usize) -> Self {
        let mut rho = vec![1; d + 1];
        rho[0] = 2;
        Self { rho }
    }

    pub fn rho(&self) -> &[u32] {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.len()
    }

    /// Least common multiple of the weights.
    pub fn lcm(&self) -> u32 {
        self.rho.iter().fold(1u32, |acc, &r| acc.lcm(&r))
    }

    /// Homogeneous dimension `sum rho_k`.
    pub fn homogeneous_dim(&self) -> u32 {
        self.rho.iter().sum()
    }

    /// Weighted order `sum rho_k beta_k` of a multi-index over the weighted slots.
    pub fn order(&self, beta: &[usize]) -> f64 {
        self.rho
            .iter()
            .zip(beta)
            .map(|(&r, &b)| r as f64 * b as f64)
            .sum()
    }

    /// Scale factors `s^{rho_k}`.
    pub fn factors(&self, s: f64) -> Vec<f64> {
        self.rho.iter().map(|&r| s.powi(r as i32)).collect()
    }

    /// The weights with an extra weight-one slot appended.
    pub fn extended(&self) -> ExtendedWeights {
        ExtendedWeights { base: self.clone() }
    }
}

impl TryFrom<Vec<u32>> for Weights {
    type Error = GradingError;
    fn try_from(rho: Vec<u32>) -> Result<Self> {
        Weights::new(rho)
    }
}

impl From<Weights> for Vec<u32> {
    fn from(w: Weights) -> Self {
        w.rho
    }
}

/// Base weights together with a weight-one slot for `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedWeights {
    base: Weights,
}

impl ExtendedWeights {
    pub fn new(base: Weights) -> Self {
        Self { base }
    }

    pub fn base(&self) -> &Weights {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    /// Flattened weights `(rho_1, ..., rho_d, 1)`.
    pub fn flatten(&self) -> Weights {
        let mut rho = self.base.rho.clone();
        rho.push(1);
        Weights { rho }
    }
}

fn check_scale(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(GradingError::InvalidParameter(format!(
            "dilation parameter must be a positive real, got {s}"
        )));
    }
    Ok(())
}

fn check_len(w: &Weights, v: &[f64]) -> Result<()> {
    if v.len() != w.dim() {
        return Err(GradingError::InvalidParameter(format!(
            "vector of length {} does not match {} weights",
            v.len(),
            w.dim()
        )));
    }
    Ok(())
}

/// `delta_s(v)`.
pub fn dilate(w: &Weights, s: f64, v: &[f64]) -> Result<Vec<f64>> {
    check_scale(s)?;
    check_len(w, v)?;
    Ok(w.rho.iter().zip(v).map(|(&r, &x)| s.powi(r as i32) * x).collect())
}

/// `(delta_s(v), s t)`.
pub fn dilate_ext(w: &ExtendedWeights, s: f64, v: &[f64], t: f64) -> Result<Vec<f64>> {
    let mut out = dilate(&w.base, s, v)?;
    out.push(s * t);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormVariant {
    /// `sum |v_k|^{1/rho_k}`.
    Sum,
    /// `(sum |v_k|^{2a/rho_k})^{1/(2a)}` with `a = lcm(rho)`.
    #[default]
    Smooth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct QuasiNormConfig {
    rho: Vec<u32>,
    #[serde(default)]
    variant: NormVariant,
}

/// A homogeneous quasi-norm for a weight tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuasiNormConfig", into = "QuasiNormConfig")]
pub struct QuasiNorm {
    weights: Weights,
    variant: NormVariant,
}

impl TryFrom<QuasiNormConfig> for QuasiNorm {
    type Error = GradingError;
    fn try_from(c: QuasiNormConfig) -> Result<Self> {
        Ok(QuasiNorm::new(Weights::new(c.rho)?, c.variant))
    }
}

impl From<QuasiNorm> for QuasiNormConfig {
    fn from(q: QuasiNorm) -> Self {
        QuasiNormConfig { rho: q.weights.rho, variant: q.variant }
    }
}

impl QuasiNorm {
    pub fn new(weights: Weights, variant: NormVariant) -> Self {
        Self { weights, variant }
    }

    pub fn smooth(weights: Weights) -> Self {
        Self::new(weights, NormVariant::Smooth)
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn variant(&self) -> NormVariant {
        self.variant
    }

    /// Evaluates the quasi-norm. Panics only on a length mismatch.
    pub fn eval(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.weights.dim(), "quasi-norm arity mismatch");
        match self.variant {
            NormVariant::Sum => self
                .weights
                .rho
                .iter()
                .zip(v)
                .map(|(&r, &x)| x.abs().powf(1.0 / r as f64))
                .sum(),
            NormVariant::Smooth => {
                let a = self.weights.lcm();
                let p: f64 = self
                    .weights
                    .rho
                    .iter()
                    .zip(v)
                    .map(|(&r, &x)| x.powi((2 * a / r) as i32))
                    .sum();
                p.powf(1.0 / (2 * a) as f64)
            }
        }
    }

    /// Rescales a nonzero vector onto the unit quasi-sphere.
    pub fn normalize(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.eval(v);
        if !(n > 0.0) {
            return Err(GradingError::InvalidParameter("cannot normalize the zero vector".into()));
        }
        dilate(&self.weights, 1.0 / n, v)
    }
}

/// `|v|` under the selected variant.
pub fn quasi_norm(q: &QuasiNorm, v: &[f64]) -> f64 {
    q.eval(v)
}

/// Constants of `C1 ||x||^a <= |x| <= C2 ||x||^b` measured on a finite sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormComparisonReport {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub b: f64,
    /// Largest observed `|x + y| / (|x| + |y|)` over sample pairs.
    pub quasi_triangle: f64,
    pub sample_count: usize,
    pub sample_description: String,
}

/// Measures the sandwich constants against the Euclidean norm.
///
/// The exponents are `a = 1/max(rho)` and `b = 1/min(rho)`; the constants are
/// the tightest ones valid on the sample. Zero samples are skipped.
pub fn measure_norm_constants(q: &QuasiNorm, samples: &[Vec<f64>]) -> Result<NormComparisonReport> {
    let pts: Vec<&Vec<f64>> = samples
        .iter()
        .filter(|v| v.iter().any(|&x| x != 0.0))
        .collect();
    if pts.is_empty() {
        return Err(GradingError::InvalidParameter("sample set is empty".into()));
    }
    for v in &pts {
        check_len(&q.weights, v)?;
    }
    let rmax = *q.weights.rho.iter().max().unwrap() as f64;
    let rmin = *q.weights.rho.iter().min().unwrap() as f64;
    let (a, b) = (1.0 / rmax, 1.0 / rmin);
    let mut c1 = f64::INFINITY;
    let mut c2 = 0.0f64;
    for v in &pts {
        let e = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let n = q.eval(v);
        c1 = c1.min(n / e.powf(a));
        c2 = c2.max(n / e.powf(b));
    }
    let mut tri = 0.0f64;
    for (i, x) in pts.iter().enumerate() {
        for y in pts.iter().skip(i) {
            let sum: Vec<f64> = x.iter().zip(y.iter()).map(|(p, r)| p + r).collect();
            let den = q.eval(x) + q.eval(y);
            tri = tri.max(q.eval(&sum) / den);
        }
    }
    Ok(NormComparisonReport {
        c1,
        c2,
        a,
        b,
        quasi_triangle: tri,
        sample_count: pts.len(),
        sample_description: format!(
            "{} nonzero points, rho={:?}, variant={:?}",
            pts.len(),
            q.weights.rho,
            q.variant
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilate_examples() {
        let w = Weights::new(vec![2, 1]).unwrap();
        assert_eq!(dilate(&w, 2.0, &[1.0, 1.0]).unwrap(), vec![4.0, 2.0]);
        let once = dilate(&w, 3.0, &dilate(&w, 2.0, &[1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(once, vec![36.0, 6.0]);
        assert_eq!(dilate(&w, 1.0, &[0.3, -2.0]).unwrap(), vec![0.3, -2.0]);
        assert!(dilate(&w, 0.0, &[1.0, 1.0]).is_err());
        assert!(dilate(&w, -1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn dilate_ext_examples() {
        let w = Weights::new(vec![1]).unwrap().extended();
        assert_eq!(dilate_ext(&w, 2.0, &[3.0], 1.0).unwrap(), vec![6.0, 2.0]);
        let w = Weights::new(vec![2, 1]).unwrap().extended();
        assert_eq!(dilate_ext(&w, 2.0, &[1.0, 1.0], 1.0).unwrap(), vec![4.0, 2.0, 2.0]);
        assert_eq!(dilate_ext(&w, 1.0, &[5.0, 6.0], 7.0).unwrap(), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn sum_norm_examples() {
        let q = QuasiNorm::new(Weights::new(vec![2, 1]).unwrap(), NormVariant::Sum);
        assert_eq!(q.eval(&[4.0, 3.0]), 5.0);
        assert_eq!(q.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(q.eval(&[9.0, 3.0]), 6.0);
        assert_eq!(q.eval(&[1.0, 1.0]), 2.0);
    }

    #[test]
    fn weights_reject_bad_input() {
        assert!(Weights::new(vec![]).is_err());
        assert!(Weights::new(vec![1, 0]).is_err());
        assert_eq!(Weights::new(vec![2, 3]).unwrap().lcm(), 6);
    }

    #[test]
    fn config_fragment_round_trip() {
        let q: QuasiNorm = serde_json::from_str(r#"{"rho":[2,1],"variant":"smooth"}"#).unwrap();
        assert_eq!(q.variant(), NormVariant::Smooth);
        assert_eq!(q.weights().rho(), &[2, 1]);
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"rho":[2,1],"variant":"smooth"}"#);
        assert!(serde_json::from_str::<QuasiNorm>(r#"{"rho":[0],"variant":"sum"}"#).is_err());
    }

    #[test]
    fn norm_constants() {
        let q = QuasiNorm::new(Weights::isotropic(2), NormVariant::Sum);
        assert!(measure_norm_constants(&q, &[]).is_err());
        let v = vec![0.6, 0.8];
        let r = measure_norm_constants(&q, &[v]).unwrap();
        assert_eq!(r.c1, r.c2);
        assert!((r.c1 - 1.4).abs() < 1e-15);
        let q1 = QuasiNorm::new(Weights::isotropic(1), NormVariant::Sum);
        let s: Vec<Vec<f64>> = (-5..=5).map(|i| vec![i as f64 * 0.7]).collect();
        let r = measure_norm_constants(&q1, &s).unwrap();
        assert!((r.quasi_triangle - 1.0).abs() < 1e-15);
    }
}
