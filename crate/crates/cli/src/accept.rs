//! The acceptance suite: ten criteria at fixed tolerances, each with a verdict.

use std::time::Instant;

use phgcalc::grading::Weights;
use phgcalc::heisenberg::HeisenbergModel;
use phgcalc::phg::{
    build_extension, certify_hs, epsilon_schedule, extract_expansion, homogenize_polynomial, verify_round_trip,
    PhgOptions, HS_SAMPLES,
};
use phgcalc::symbol::{
    homogeneous_check, hs_check, symbol_estimate, CheckOptions, EvaluationGrid, Layout, SymbolExpr, Tape,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::direction;
use crate::config::{HeisenbergConfig, RunConfig};
use crate::corpus::{self, Class, Loaded};
use crate::model_checks::{self, ModelReport};
use crate::report::{write_json, Envelope};
use crate::{CliError, Outcome, Result};

pub const RESTRICTION_TOLERANCE: f64 = 1e-12;
pub const HOMOGENEITY_TOLERANCE: f64 = 1e-12;
pub const WORKED_TOLERANCE: f64 = 1e-10;

/// One measured quantity or boolean verdict inside a criterion.
#[derive(Debug, Clone, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Metric {
    pub fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: Some(value), tolerance: Some(tolerance), pass: value <= tolerance }
    }

    pub fn verdict(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), value: None, tolerance: None, pass }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub property: &'static str,
    pub metrics: Vec<Metric>,
    pub pass: bool,
    /// Wall time, kept out of the JSON summary so reports stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl CriterionResult {
    /// `PASS  3 build-extension  ...` with the worst measured ratio to its tolerance.
    pub fn line(&self) -> String {
        let passed = self.metrics.iter().filter(|m| m.pass).count();
        let worst = self
            .metrics
            .iter()
            .filter_map(|m| Some((m, m.value? / m.tolerance?)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(m, _)| format!(", worst {} = {:.3e} (tol {:.0e})", m.name, m.value.unwrap_or(0.0), m.tolerance.unwrap_or(0.0)))
            .unwrap_or_default();
        let failed: Vec<&str> = self.metrics.iter().filter(|m| !m.pass).map(|m| m.name.as_str()).collect();
        let failed = if failed.is_empty() { String::new() } else { format!(", failed: {}", failed.join(" ")) };
        format!(
            "{} {:>2} {:<17} {}/{} checks{worst}{failed} [{:.1} s]",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            passed,
            self.metrics.len(),
            self.seconds
        )
    }
}

pub struct Criterion {
    pub id: usize,
    pub name: &'static str,
    pub property: &'static str,
    run: fn(&Suite) -> Result<Vec<Metric>>,
}

pub const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, name: "homogenize", property: "exact homogenization of weighted polynomials", run: homogenize },
    Criterion { id: 2, name: "worked-extraction", property: "extraction of t^2 + |xi|^2", run: worked },
    Criterion { id: 3, name: "build-extension", property: "built extensions are homogeneous modulo Schwartz", run: build },
    Criterion { id: 4, name: "round-trip", property: "expansions and extensions determine each other", run: round_trip },
    Criterion { id: 5, name: "restrictions", property: "restrictions of extensions at t = 1 and t = 0", run: restrictions },
    Criterion { id: 6, name: "algebra", property: "group law, automorphisms and left-invariant fields", run: algebra },
    Criterion { id: 7, name: "transpose", property: "transpose inverse of the chart differential", run: transpose },
    Criterion { id: 8, name: "diagram", property: "chart push-forward Fourier diagram", run: diagram },
    Criterion { id: 9, name: "zoom", property: "zoom intertwining", run: zoom },
    Criterion { id: 10, name: "quantize", property: "quantization of 1 and of sigma_0", run: quantize },
];

/// Shared inputs: the selected corpus, the seed and the fixed suite tolerances.
pub struct Suite {
    pub seed: u64,
    pub corpus: Vec<Loaded>,
    pub model_config: RunConfig,
}

impl Suite {
    pub fn new(config: &RunConfig) -> Result<Self> {
        let entries = corpus::select(config)?;
        if entries.is_empty() {
            return Err(CliError::Usage("the corpus selection is empty".into()));
        }
        let corpus = entries.iter().map(|e| e.load(config)).collect::<Result<Vec<_>>>()?;
        let model_config = RunConfig { seed: config.seed, heisenberg: HeisenbergConfig::default(), ..RunConfig::default() };
        Ok(Self { seed: config.seed, corpus, model_config })
    }

    fn opts(&self) -> PhgOptions {
        PhgOptions { seed: self.seed, ..PhgOptions::default() }
    }

    fn of_class(&self, class: Class) -> impl Iterator<Item = &Loaded> {
        self.corpus.iter().filter(move |l| l.entry.class == class)
    }
}

/// Criteria selected by number or name; all of them for `None`.
pub fn select(filter: Option<&str>) -> Result<Vec<&'static Criterion>> {
    let Some(f) = filter else { return Ok(CRITERIA.iter().collect()) };
    CRITERIA
        .iter()
        .find(|c| c.name == f || c.id.to_string() == f)
        .map(|c| vec![c])
        .ok_or_else(|| {
            let names: Vec<&str> = CRITERIA.iter().map(|c| c.name).collect();
            CliError::Usage(format!("unknown criterion `{f}`; expected 1-10 or one of {}", names.join(", ")))
        })
}

pub fn run_one(c: &Criterion, suite: &Suite) -> CriterionResult {
    let start = Instant::now();
    let metrics = (c.run)(suite).unwrap_or_else(|e| vec![Metric::verdict(format!("error: {e}"), false)]);
    let pass = !metrics.is_empty() && metrics.iter().all(|m| m.pass);
    CriterionResult { id: c.id, name: c.name, property: c.property, metrics, pass, seconds: start.elapsed().as_secs_f64() }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub criteria: Vec<CriterionResult>,
    pub pass: bool,
}

/// `accept`: runs the selected criteria, prints one line each and writes `acceptance.json`.
pub fn accept(config: &RunConfig, filter: Option<&str>) -> Result<Outcome> {
    let criteria = select(filter)?;
    let suite = Suite::new(config)?;
    let mut results = Vec::new();
    for c in criteria {
        let r = run_one(c, &suite);
        println!("{}", r.line());
        results.push(r);
    }
    let pass = results.iter().all(|r| r.pass);
    let summary = Summary { criteria: results, pass };
    let env = Envelope {
        command: "accept",
        anchor: "acceptance suite",
        entry: None,
        seed: config.seed,
        pass,
        report: &summary,
    };
    let path = write_json(&config.out, "acceptance.json", &env)?;
    Ok(Outcome { pass, files: vec![path] })
}

/// Multi-indices `beta` with `sum rho_k beta_k <= m`.
fn monomials(rho: &[u32], m: u32) -> Vec<Vec<u32>> {
    let Some((&first, rest)) = rho.split_first() else { return vec![Vec::new()] };
    let mut out = Vec::new();
    for b in 0..=m / first {
        for mut tail in monomials(rest, m - b * first) {
            tail.insert(0, b);
            out.push(tail);
        }
    }
    out
}

/// A random polynomial `sum c_beta xi^beta` of weighted degree at most `m`, with its terms.
fn random_polynomial(rng: &mut ChaCha8Rng, layout: &Layout, m: u32) -> Vec<(f64, Vec<u32>)> {
    let rho = layout.weights.rho().to_vec();
    let mut terms = Vec::new();
    for beta in monomials(&rho, m) {
        if rng.gen_bool(0.6) {
            terms.push((rng.gen_range(-1.0..1.0), beta));
        }
    }
    if terms.is_empty() {
        terms.push((1.0, vec![0; rho.len()]));
    }
    terms
}

fn polynomial_expr(layout: &Layout, terms: &[(f64, Vec<u32>)]) -> SymbolExpr {
    SymbolExpr::sum(terms.iter().map(|(c, beta)| {
        SymbolExpr::product(beta.iter().enumerate().map(|(k, &b)| SymbolExpr::var(layout.xi(k)).powi(b as i32))).scale(*c)
    }))
}

fn homogenize(suite: &Suite) -> Result<Vec<Metric>> {
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    let (mut restriction, mut violation) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let d = rng.gen_range(1..=3);
        let rho: Vec<u32> = (0..d).map(|_| rng.gen_range(1..=2)).collect();
        let m = rng.gen_range(0..=6);
        let layout = Layout::new(0, Weights::new(rho).expect("positive weights"), true);
        let terms = random_polynomial(&mut rng, &layout, m);
        let a = polynomial_expr(&layout, &terms);
        let u = homogenize_polynomial(&a, m, &layout)?;
        let grid = EvaluationGrid::standard(0, &layout.extended_frame(), suite.seed)?;
        violation = violation.max(homogeneous_check(&u, m as f64, &grid)?.max_violation);
        let (ta, tu) = (Tape::compile(&a)?, Tape::compile(&u.restrict(layout.t(), 1.0))?);
        for _ in 0..50 {
            let mut p: Vec<f64> = (0..d).map(|_| rng.gen_range(-4.0..4.0)).collect();
            p.push(1.0);
            let want = ta.eval(&p)?;
            let scale: f64 = terms
                .iter()
                .map(|(c, beta)| c.abs() * beta.iter().zip(&p).map(|(&b, x)| x.abs().powi(b as i32)).product::<f64>())
                .sum();
            restriction = restriction.max((tu.eval(&p)? - want).abs() / scale.max(want.abs()));
        }
    }
    Ok(vec![
        Metric::within("restriction_rel_error", restriction, RESTRICTION_TOLERANCE),
        Metric::within("homogeneity_violation", violation, HOMOGENEITY_TOLERANCE),
    ])
}

fn worked(suite: &Suite) -> Result<Vec<Metric>> {
    let layout = Layout::new(0, Weights::isotropic(2), true);
    let xi = |k| SymbolExpr::var(layout.xi(k));
    let t = SymbolExpr::var(layout.t());
    let u = t.powi(2).add(&xi(0).powi(2)).add(&xi(1).powi(2));
    let grid = EvaluationGrid::standard(0, &layout.extended_frame(), suite.seed)?;
    let opts = suite.opts();
    let cert = certify_hs(&u, 2.0, &grid, &opts)?;
    let ex = extract_expansion(&u, 2.0, 2, &layout, &cert, &opts)?;
    let hand = |j: usize, p: &[f64]| match j {
        0 => p[0] * p[0] + p[1] * p[1],
        1 => 0.0,
        _ => 1.0,
    };
    let tapes = ex.expansion.terms.iter().map(|term| Tape::compile(&term.expr)).collect::<std::result::Result<Vec<_>, _>>()?;
    let remainder = ex.expansion.remainder.clone().unwrap_or_else(SymbolExpr::zero);
    let rem = Tape::compile(&remainder)?;
    let mut errors = vec![0.0f64; tapes.len()];
    let mut rem_max = 0.0f64;
    for &r in grid.shells() {
        for p in grid.points_at(r, false) {
            for (j, tape) in tapes.iter().enumerate() {
                let w = hand(j, &p);
                errors[j] = errors[j].max((tape.eval(&p[..2])? - w).abs() / w.abs().max(1.0));
            }
            rem_max = rem_max.max(rem.eval(&p)?.abs());
        }
    }
    let mut metrics = vec![Metric::verdict("three terms", tapes.len() == 3)];
    metrics.extend(errors.iter().enumerate().map(|(j, &e)| Metric::within(format!("a{j}"), e, WORKED_TOLERANCE)));
    metrics.push(Metric::within("remainder", rem_max, WORKED_TOLERANCE));
    Ok(metrics)
}

fn build(suite: &Suite) -> Result<Vec<Metric>> {
    let check = CheckOptions::default();
    let expansions: Vec<&Loaded> = suite.of_class(Class::Phg).filter(|l| !l.terms.is_empty()).collect();
    let orders: Vec<f64> = expansions.iter().map(|l| l.entry.order).collect();
    let mut metrics = vec![
        Metric::verdict("at least three expansions", expansions.len() >= 3),
        Metric::verdict("orders 0, 1 and 2 present", [0.0, 1.0, 2.0].iter().all(|m| orders.contains(m))),
        Metric::verdict(
            "weights (2, 1) present",
            expansions.iter().any(|l| l.layout.weights.rho() == [2, 1]),
        ),
        Metric::verdict(
            "at most six terms and three frequencies",
            expansions.iter().all(|l| l.terms.len() <= 6 && l.layout.d() <= 3),
        ),
    ];
    for l in expansions {
        let exp = l.expansion();
        let grid = EvaluationGrid::standard(l.layout.n_x, &l.layout.frame(), suite.seed)?;
        let schedule = epsilon_schedule(&exp, &grid, &check)?;
        let built = build_extension(&exp, &schedule)?;
        let ext = built.layout.clone();
        let ext_grid = EvaluationGrid::standard(ext.n_x, &ext.extended_frame(), suite.seed)?.covering(4.0 / schedule.min());
        let hs = hs_check(&built.b, exp.m, &ext_grid, &HS_SAMPLES, &check)?;
        metrics.push(Metric::verdict(format!("{} homogeneous modulo Schwartz", l.entry.name), hs.pass));
    }
    Ok(metrics)
}

fn round_trip(suite: &Suite) -> Result<Vec<Metric>> {
    let opts = suite.opts();
    let mut metrics = Vec::new();
    let config = RunConfig { extract_terms: 2, ..RunConfig::default() };
    for l in suite.of_class(Class::Hs).chain(suite.of_class(Class::Phg).filter(|l| !l.terms.is_empty())) {
        let report = verify_round_trip(&direction(&config, l)?, &l.layout, &opts)?;
        let name = &l.entry.name;
        if let Some(r) = &report.restriction {
            metrics.push(Metric::verdict(format!("{name} {} restriction Schwartz", report.direction), r.pass));
        }
        if report.direction == "build" {
            for t in &report.terms {
                metrics.push(Metric::within(format!("{name} a{}", t.j), t.max_rel_error, phgcalc::phg::roundtrip::TERM_TOLERANCE));
            }
        }
    }
    if metrics.is_empty() {
        metrics.push(Metric::verdict("corpus has extensions or expansions", false));
    }
    Ok(metrics)
}

fn restrictions(suite: &Suite) -> Result<Vec<Metric>> {
    let check = CheckOptions::default();
    let mut metrics = Vec::new();
    for l in suite.of_class(Class::Hs) {
        let (u, m, t) = (&l.expr, l.entry.order, l.layout.t());
        let grid = EvaluationGrid::standard(l.layout.n_x, &l.layout.frame(), suite.seed)?;
        let at_one = symbol_estimate(&u.restrict(t, 1.0), m, &grid, &check)?;
        let at_zero = hs_check(&u.restrict(t, 0.0), m, &grid, &HS_SAMPLES, &check)?;
        metrics.push(Metric::verdict(format!("{} symbol at t = 1", l.entry.name), at_one.pass));
        metrics.push(Metric::verdict(format!("{} homogeneous modulo Schwartz at t = 0", l.entry.name), at_zero.pass));
    }
    if metrics.is_empty() {
        metrics.push(Metric::verdict("corpus has extensions", false));
    }
    Ok(metrics)
}

fn residual_metrics(label: &str, r: &ModelReport) -> Vec<Metric> {
    r.residuals.iter().map(|x| Metric::within(format!("{label} {}", x.name), x.value, x.tolerance)).collect()
}

fn algebra(suite: &Suite) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for n in [1, 2] {
        let r = model_checks::algebra(&HeisenbergModel::heisenberg(n), 1000, suite.seed)?;
        out.extend(residual_metrics(&format!("H{n}"), &r));
    }
    Ok(out)
}

fn transpose(suite: &Suite) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for n in [1, 2] {
        let r = model_checks::transpose(&HeisenbergModel::heisenberg(n), 100, suite.seed)?;
        out.extend(residual_metrics(&format!("d={}", 2 * n), &r));
    }
    Ok(out)
}

fn diagram(suite: &Suite) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for (label, m) in [("heisenberg", HeisenbergModel::heisenberg(1)), ("abelian", HeisenbergModel::abelian(2))] {
        out.extend(residual_metrics(label, &model_checks::diagram(&m, &suite.model_config)?));
    }
    Ok(out)
}

fn zoom(suite: &Suite) -> Result<Vec<Metric>> {
    let mut out = Vec::new();
    for (label, m) in [("abelian", HeisenbergModel::abelian(2)), ("heisenberg", HeisenbergModel::heisenberg(1))] {
        out.extend(residual_metrics(label, &model_checks::zoom(&m, &suite.model_config)?));
    }
    Ok(out)
}

fn quantize(suite: &Suite) -> Result<Vec<Metric>> {
    let r = model_checks::quantization(&HeisenbergModel::heisenberg(1), &suite.model_config)?;
    Ok(residual_metrics("heisenberg", &r))
}
