//! Residual checks on a model group: algebra, charts, kernels and zooms.

use clap::ValueEnum;
use num_complex::Complex64;
use phgcalc::heisenberg::kernel::zoom_chart_residual;
use phgcalc::heisenberg::{
    chart_diagram_check, exp_chart, exp_chart_inverse, flow_rk4, quantize, transpose_inverse_residual,
    zoom_intertwining_check, GroupoidPoint, Grid, HeisenbergModel, Interpolation, KernelGrid,
};
use phgcalc::symbol::{SymbolExpr, Tape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::report::{write_json, Envelope};
use crate::{Outcome, Result};

pub const GROUP_TOLERANCE: f64 = 1e-12;
pub const LEFT_INVARIANCE_TOLERANCE: f64 = 1e-6;
pub const COMMUTATOR_TOLERANCE: f64 = 1e-8;
pub const FLOW_TOLERANCE: f64 = 1e-8;
pub const CHART_TOLERANCE: f64 = 1e-12;
pub const TRANSPOSE_TOLERANCE: f64 = 1e-12;
pub const DIAGRAM_TOLERANCE: f64 = 1e-6;
pub const ABELIAN_DIAGRAM_TOLERANCE: f64 = 1e-8;
pub const ZOOM_TOLERANCE: f64 = 1e-6;
pub const IDENTITY_TOLERANCE: f64 = 1e-10;
pub const DERIVATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelCheck {
    /// Associativity, dilation automorphisms, left invariance and commutators.
    Algebra,
    /// Exponential chart against the flow, chart inverse and zoom in chart coordinates.
    Chart,
    /// `(phi_y^{-1})^T eta = sigma~(y, -eta)`.
    Transpose,
    /// Chart push-forward closes the Fourier diagram.
    Diagram,
    /// Zoom intertwining under the fiberwise Fourier transform.
    Zoom,
    /// `Op(1) = id` and `Op(sigma_j) = -i X_j` on grid functions.
    Quantize,
}

impl ModelCheck {
    pub fn name(self) -> &'static str {
        match self {
            ModelCheck::Algebra => "algebra",
            ModelCheck::Chart => "chart",
            ModelCheck::Transpose => "transpose",
            ModelCheck::Diagram => "diagram",
            ModelCheck::Zoom => "zoom",
            ModelCheck::Quantize => "quantize",
        }
    }

    pub fn anchor(self) -> &'static str {
        match self {
            ModelCheck::Algebra => "nilpotent group law, graded automorphisms and left-invariant fields",
            ModelCheck::Chart => "exponential chart of the tangent groupoid and its zoom action",
            ModelCheck::Transpose => "transpose inverse of the chart differential is the sigma change of frequency",
            ModelCheck::Diagram => "chart push-forward of kernels commutes with the fiberwise Fourier transform",
            ModelCheck::Zoom => "fiberwise Fourier transform intertwines the zoom action with beta_s",
            ModelCheck::Quantize => "quantization of 1 and of the sigma frequencies",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Residual {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelReport {
    pub check: ModelCheck,
    pub model: HeisenbergModel,
    pub residuals: Vec<Residual>,
    /// Full report of the kernel-level checks.
    pub detail: Option<serde_json::Value>,
    pub pass: bool,
}

fn report(check: ModelCheck, m: &HeisenbergModel, residuals: Vec<Residual>, detail: Option<serde_json::Value>) -> ModelReport {
    let pass = residuals.iter().all(|r| r.pass);
    ModelReport { check, model: m.clone(), residuals, detail, pass }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn linf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-r..r)).collect()
}

fn x(k: usize) -> SymbolExpr {
    SymbolExpr::var(k)
}

/// Smooth test functions on the group touching the central and both extreme layer coordinates.
fn test_functions(m: &HeisenbergModel) -> Vec<SymbolExpr> {
    let d = m.d();
    vec![
        x(0).mul(&x(1)).add(&x(d).powi(2)),
        x(0).scale(0.3).add(&x(1).mul(&x(d))).exp(),
        x(1).mul(&x(0).powi(2)).sub(&x(d).scale(2.0)),
    ]
}

pub fn algebra(m: &HeisenbergModel, samples: usize, seed: u64) -> Result<ModelReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.dim();
    let (mut assoc, mut auto) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let (a, b, c) = (point(&mut rng, n, 2.0), point(&mut rng, n, 2.0), point(&mut rng, n, 2.0));
        let s = rng.gen_range(0.25..4.0);
        let left = m.group_mul(&m.group_mul(&a, &b)?, &c)?;
        let right = m.group_mul(&a, &m.group_mul(&b, &c)?)?;
        assoc = assoc.max(max_diff(&left, &right) / linf(&left).max(1.0));
        let lhs = m.dilate(s, &m.group_mul(&a, &b)?)?;
        let rhs = m.group_mul(&m.dilate(s, &a)?, &m.dilate(s, &b)?)?;
        auto = auto.max(max_diff(&lhs, &rhs) / linf(&lhs).max(1.0));
    }
    let mut left_inv = 0.0f64;
    let fields = |f: &SymbolExpr| -> Result<Vec<Tape>> {
        (0..n).map(|j| Ok(Tape::compile(&m.field(j, f))?)).collect()
    };
    for f in test_functions(m) {
        let direct = fields(&f)?;
        for _ in 0..3 {
            let y = point(&mut rng, n, 1.5);
            let translated = fields(&m.left_translate(&f, &y))?;
            for _ in 0..3 {
                let p = point(&mut rng, n, 1.5);
                let yp = m.group_mul(&y, &p)?;
                for (t, d) in translated.iter().zip(&direct) {
                    left_inv = left_inv.max((t.eval(&p)? - d.eval(&yp)?).abs());
                }
            }
        }
    }
    let f = x(0).scale(0.3).exp().mul(&SymbolExpr::one().add(&SymbolExpr::sum((1..n).map(|k| x(k).powi(2).scale(k as f64 / n as f64))))).add(&x(0).mul(&x(1)));
    let mut comm = 0.0f64;
    for _ in 0..3 {
        let p = point(&mut rng, n, 1.0);
        let x0f = m.field_apply(0, &f, &p)?;
        for i in 0..n {
            for k in 0..n {
                let want = if i == 0 || k == 0 { 0.0 } else { m.b(k, i) * x0f };
                comm = comm.max((m.commutator_apply(i, k, &f, &p)? - want).abs());
            }
        }
    }
    let residuals = vec![
        Residual::new("associativity", assoc, GROUP_TOLERANCE),
        Residual::new("dilation_automorphism", auto, GROUP_TOLERANCE),
        Residual::new("left_invariance", left_inv, LEFT_INVARIANCE_TOLERANCE),
        Residual::new("commutators", comm, COMMUTATOR_TOLERANCE),
    ];
    Ok(report(ModelCheck::Algebra, m, residuals, None))
}

pub fn chart(m: &HeisenbergModel, samples: usize, seed: u64) -> Result<ModelReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = m.dim();
    let (mut flow, mut inverse) = (0.0f64, 0.0f64);
    for _ in 0..samples.min(100) {
        let (y, v) = (point(&mut rng, n, 1.0), point(&mut rng, n, 1.0));
        for t in [0.5, 1.0, -1.7, 2.0] {
            let w: Vec<f64> = v.iter().enumerate().map(|(k, c)| if k == 0 { -t * t * c } else { -t * c }).collect();
            let p = exp_chart(m, &y, &v, t);
            if let GroupoidPoint::Pair { x: closed, .. } = &p {
                flow = flow.max(max_diff(closed, &flow_rk4(m, &y, &w, 64)));
            }
            let back = exp_chart_inverse(m, &p);
            inverse = inverse.max(max_diff(&back.v, &v).max((back.t - t).abs()));
        }
    }
    let bases = KernelGrid::default_bases(m, 5, seed);
    let zoom = [1.5, 2.0].iter().map(|&s| zoom_chart_residual(m, &bases, s, seed)).fold(0.0, f64::max);
    let residuals = vec![
        Residual::new("flow", flow, FLOW_TOLERANCE),
        Residual::new("chart_inverse", inverse, CHART_TOLERANCE),
        Residual::new("zoom_in_chart", zoom, CHART_TOLERANCE),
    ];
    Ok(report(ModelCheck::Chart, m, residuals, None))
}

pub fn transpose(m: &HeisenbergModel, samples: usize, seed: u64) -> Result<ModelReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let (y, eta) = (point(&mut rng, m.dim(), 2.0), point(&mut rng, m.dim(), 2.0));
        worst = worst.max(transpose_inverse_residual(m, &y, &eta)?);
    }
    Ok(report(ModelCheck::Transpose, m, vec![Residual::new("transpose_inverse", worst, TRANSPOSE_TOLERANCE)], None))
}

fn is_abelian(m: &HeisenbergModel) -> bool {
    m.matrix().iter().all(|&b| b == 0.0)
}

fn gaussian_xi(m: &HeisenbergModel, t_slot: bool, width: f64) -> SymbolExpr {
    let layout = if t_slot { m.layout().with_t() } else { m.layout() };
    SymbolExpr::sum((0..m.dim()).map(|k| x(layout.xi(k)).powi(2))).scale(-1.0 / width).exp()
}

fn model_grid(m: &HeisenbergModel, config: &RunConfig) -> Result<Grid> {
    Ok(Grid::cube(m.dim(), config.heisenberg.points, config.heisenberg.half_width)?)
}

pub fn diagram(m: &HeisenbergModel, config: &RunConfig) -> Result<ModelReport> {
    let grid = model_grid(m, config)?;
    let bases = KernelGrid::default_bases(m, config.heisenberg.bases, config.seed);
    let r = chart_diagram_check(m, &gaussian_xi(m, false, 1.0), &grid, &bases, Interpolation::Spectral)?;
    let tol = if is_abelian(m) { ABELIAN_DIAGRAM_TOLERANCE } else { DIAGRAM_TOLERANCE };
    let residuals = vec![Residual::new("diagram_linf", r.diagram_linf, tol)];
    Ok(report(ModelCheck::Diagram, m, residuals, Some(serde_json::to_value(&r)?)))
}

/// `(sigma^* exp(-|xi|^2 / 4)) exp(-t^2)` on the model layout with `t`.
pub fn zoom_family(m: &HeisenbergModel) -> SymbolExpr {
    let layout = m.layout().with_t();
    let t = x(layout.t());
    m.sigma_pullback(&gaussian_xi(m, true, 4.0), &layout).mul(&t.powi(2).neg().exp())
}

pub fn zoom(m: &HeisenbergModel, config: &RunConfig) -> Result<ModelReport> {
    let grid = model_grid(m, config)?;
    let bases = KernelGrid::default_bases(m, config.heisenberg.bases, config.seed);
    let u = zoom_family(m);
    let (mut residuals, mut details) = (Vec::new(), Vec::new());
    for s in [1.5, 2.0] {
        let r = zoom_intertwining_check(m, &u, &grid, &bases, &[0.0, 0.6], s)?;
        residuals.push(Residual::new(format!("zoom_linf_s{s}"), r.zoom_linf, ZOOM_TOLERANCE));
        residuals.push(Residual::new(format!("chart_residual_s{s}"), r.chart_residual, CHART_TOLERANCE));
        details.push(serde_json::to_value(&r)?);
    }
    Ok(report(ModelCheck::Zoom, m, residuals, Some(serde_json::Value::Array(details))))
}

fn sampled(grid: &Grid, e: &SymbolExpr) -> Result<Vec<f64>> {
    let tape = Tape::compile(e)?;
    let mut w = tape.workspace();
    (0..grid.len()).map(|i| Ok(tape.eval_with(&mut w, &grid.positions_at(i))?)).collect()
}

pub fn quantization(m: &HeisenbergModel, config: &RunConfig) -> Result<ModelReport> {
    let grid = model_grid(m, config)?;
    let layout = m.layout();
    let gauss = SymbolExpr::sum((0..m.dim()).map(|k| x(k).powi(2))).scale(-0.5).exp();
    let phi = gauss.mul(&x(1).add(&SymbolExpr::constant(0.5)));
    let values = sampled(&grid, &phi)?;
    let dist = |out: &[Complex64], want: &dyn Fn(usize) -> Complex64| {
        out.iter().enumerate().map(|(i, z)| (z - want(i)).norm()).fold(0.0, f64::max)
    };
    let id = quantize(m, &SymbolExpr::one(), &phi, &grid)?;
    let mut residuals = vec![Residual::new("identity", dist(&id, &|i| Complex64::new(values[i], 0.0)), IDENTITY_TOLERANCE)];
    for (j, s) in m.sigma_exprs(&layout).iter().enumerate() {
        let out = quantize(m, s, &phi, &grid)?;
        let xj = sampled(&grid, &m.field(j, &phi))?;
        let err = dist(&out, &|i| Complex64::new(0.0, -xj[i]));
        residuals.push(Residual::new(format!("sigma_{j}"), err, DERIVATIVE_TOLERANCE));
    }
    Ok(report(ModelCheck::Quantize, m, residuals, None))
}

pub fn run_check(m: &HeisenbergModel, check: ModelCheck, config: &RunConfig) -> Result<ModelReport> {
    let (samples, seed) = (config.heisenberg.samples, config.seed);
    match check {
        ModelCheck::Algebra => algebra(m, samples, seed),
        ModelCheck::Chart => chart(m, samples, seed),
        ModelCheck::Transpose => transpose(m, samples, seed),
        ModelCheck::Diagram => diagram(m, config),
        ModelCheck::Zoom => zoom(m, config),
        ModelCheck::Quantize => quantization(m, config),
    }
}

/// `heisenberg <check>`: writes `heisenberg.<check>.json`.
pub fn heisenberg(config: &RunConfig, check: ModelCheck) -> Result<Outcome> {
    let m = config.model();
    let r = run_check(&m, check, config)?;
    let env = Envelope { command: "heisenberg", anchor: check.anchor(), entry: None, seed: config.seed, pass: r.pass, report: &r };
    let path = write_json(&config.out, &format!("heisenberg.{}.json", check.name()), &env)?;
    Ok(Outcome { pass: r.pass, files: vec![path] })
}
