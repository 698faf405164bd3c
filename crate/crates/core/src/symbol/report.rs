//! Decay and seminorm reports with JSON and CSV output.

use serde::{Serialize, Serializer};

pub(crate) fn real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

pub(crate) fn reals<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    struct R(f64);
    impl Serialize for R {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            real(&self.0, s)
        }
    }
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&R(*x))?;
    }
    seq.end()
}

/// One row of a decay or seminorm table.
#[derive(Debug, Clone, Serialize)]
pub struct ShellRow {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    #[serde(serialize_with = "real")]
    pub shell_radius: f64,
    #[serde(serialize_with = "real")]
    pub sup_value: f64,
    #[serde(serialize_with = "real")]
    pub constant: f64,
    #[serde(serialize_with = "real")]
    pub slope: f64,
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

fn csv_real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// Renders rows as CSV with columns `alpha,beta,shell_radius,sup_value,constant,slope`.
pub fn rows_to_csv(rows: &[ShellRow]) -> String {
    let mut s = String::from("alpha,beta,shell_radius,sup_value,constant,slope\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            join(&r.alpha),
            join(&r.beta),
            csv_real(r.shell_radius),
            csv_real(r.sup_value),
            csv_real(r.constant),
            csv_real(r.slope)
        ));
    }
    s
}

/// Shell suprema of one derivative and their fitted log-log slope.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    #[serde(serialize_with = "reals")]
    pub sups: Vec<f64>,
    #[serde(serialize_with = "real")]
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderVerdict {
    pub k: usize,
    pub pass: bool,
}

/// Evidence that an expression decays faster than `(1 + |xi|)^{-k}` for `k <= k_max`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub k_max: usize,
    pub deriv_max: usize,
    pub slope_tolerance: f64,
    pub shells: Vec<f64>,
    pub fits: Vec<DecayFit>,
    #[serde(serialize_with = "real")]
    pub worst_slope: f64,
    pub verdicts: Vec<OrderVerdict>,
    pub pass: bool,
}

impl DecayReport {
    pub fn passes_order(&self, k: usize) -> bool {
        self.verdicts.iter().find(|v| v.k == k).is_some_and(|v| v.pass)
    }

    /// Table rows; `constant` is `sup * (1 + r)^{k_max}`.
    pub fn rows(&self) -> Vec<ShellRow> {
        let mut rows = Vec::new();
        for f in &self.fits {
            for (r, s) in self.shells.iter().zip(&f.sups) {
                rows.push(ShellRow {
                    alpha: f.alpha.clone(),
                    beta: f.beta.clone(),
                    shell_radius: *r,
                    sup_value: *s,
                    constant: s * (1.0 + r).powi(self.k_max as i32),
                    slope: f.slope,
                });
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows())
    }
}

/// Measured constant of `|D^alpha_x D^beta_xi a| <= C (1 + |xi|)^{m - |beta|}`.
#[derive(Debug, Clone, Serialize)]
pub struct SeminormFit {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub weighted_order: f64,
    #[serde(serialize_with = "real")]
    pub constant: f64,
    #[serde(serialize_with = "real")]
    pub drift: f64,
    #[serde(serialize_with = "reals")]
    pub ratios: Vec<f64>,
    pub pass: bool,
}

/// Symbol-class evidence for one order.
#[derive(Debug, Clone, Serialize)]
pub struct SeminormReport {
    pub m: f64,
    pub deriv_max: usize,
    pub drift_tolerance: f64,
    pub shells: Vec<f64>,
    pub fits: Vec<SeminormFit>,
    pub pass: bool,
}

impl SeminormReport {
    /// Table rows; `constant` is the per-shell ratio, `slope` the drift.
    pub fn rows(&self) -> Vec<ShellRow> {
        let mut rows = Vec::new();
        for f in &self.fits {
            for (r, c) in self.shells.iter().zip(&f.ratios) {
                let scale = (1.0 + r).powf(self.m - f.weighted_order);
                rows.push(ShellRow {
                    alpha: f.alpha.clone(),
                    beta: f.beta.clone(),
                    shell_radius: *r,
                    sup_value: c * scale,
                    constant: *c,
                    slope: f.drift,
                });
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows())
    }
}
