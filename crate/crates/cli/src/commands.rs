//! `check`, `extract`, `extend` and `roundtrip` on corpus entries.

use std::path::PathBuf;

use phgcalc::phg::{
    build_extension, certify_hs, epsilon_schedule, extract_expansion, homogenize_polynomial, verify_round_trip,
    Direction, EpsilonSchedule, HS_SAMPLES,
};
use phgcalc::symbol::{
    homogeneous_check, hs_check, schwartz_check, symbol_estimate, CheckOptions, DecayReport, EvaluationGrid,
    HomogeneousReport, HsReport, Layout, SeminormReport, Tape,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::corpus::{self, Class, Loaded};
use crate::report::{samples_csv, write_csv, write_json, Envelope};
use crate::{CliError, Outcome, Result};

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum CheckReport {
    Schwartz { decay: DecayReport },
    Symbol { seminorms: SeminormReport },
    Homogeneous { homogeneity: HomogeneousReport, tolerance: f64 },
    Hs { hs: HsReport },
    Phg { schedule: EpsilonSchedule, hs: HsReport, restriction: SeminormReport },
}

impl CheckReport {
    pub fn pass(&self) -> bool {
        match self {
            CheckReport::Schwartz { decay } => decay.pass,
            CheckReport::Symbol { seminorms } => seminorms.pass,
            CheckReport::Homogeneous { homogeneity, tolerance } => homogeneity.max_violation <= *tolerance,
            CheckReport::Hs { hs } => hs.pass,
            CheckReport::Phg { hs, restriction, .. } => hs.pass && restriction.pass,
        }
    }
}

fn anchor(class: Class) -> &'static str {
    match class {
        Class::Schwartz => "rapid decay of every derivative in the frequency variables",
        Class::Symbol => "symbol estimates |D_x^a D_xi^b a| <= C (1 + |xi|)^(m - [b])",
        Class::Homogeneous => "exact homogeneity under the graded dilations",
        Class::Hs => "homogeneity modulo Schwartz in (xi, t)",
        Class::Phg => "built extension is homogeneous modulo Schwartz and restricts to a symbol of order m",
    }
}

fn xi_grid(config: &RunConfig, layout: &Layout) -> Result<EvaluationGrid> {
    Ok(EvaluationGrid::new(layout.n_x, &layout.frame(), config.grid_spec())?)
}

fn ext_grid(config: &RunConfig, layout: &Layout) -> Result<EvaluationGrid> {
    let layout = layout.with_t();
    Ok(EvaluationGrid::new(layout.n_x, &layout.extended_frame(), config.grid_spec())?)
}

fn hs_csvs(dir: &std::path::Path, stem: &str, hs: &HsReport, files: &mut Vec<PathBuf>) -> Result<()> {
    for (i, sample) in hs.samples.iter().enumerate() {
        files.push(write_csv(dir, &format!("{stem}.s{i}.csv"), &sample.report.to_csv())?);
    }
    Ok(())
}

/// Runs the declared-class checker of `loaded`.
pub fn check_loaded(config: &RunConfig, loaded: &Loaded) -> Result<CheckReport> {
    let e = &loaded.entry;
    let opts = config.check_options();
    let report = match e.class {
        Class::Schwartz => {
            let opts = CheckOptions { k_max: e.k_max.unwrap_or(opts.k_max), ..opts };
            CheckReport::Schwartz { decay: schwartz_check(&loaded.expr, &xi_grid(config, &loaded.layout)?, &opts)? }
        }
        Class::Symbol => CheckReport::Symbol {
            seminorms: symbol_estimate(&loaded.expr, e.order, &xi_grid(config, &loaded.layout)?, &opts)?,
        },
        Class::Homogeneous => CheckReport::Homogeneous {
            homogeneity: homogeneous_check(&loaded.expr, e.order, &xi_grid(config, &loaded.layout)?)?,
            tolerance: config.tolerances.homogeneity,
        },
        Class::Hs => CheckReport::Hs {
            hs: hs_check(&loaded.expr, e.order, &ext_grid(config, &loaded.layout)?, &HS_SAMPLES, &opts)?,
        },
        Class::Phg => {
            let exp = loaded.expansion();
            let grid = xi_grid(config, &loaded.layout)?;
            let schedule = epsilon_schedule(&exp, &grid, &opts)?;
            let built = build_extension(&exp, &schedule)?;
            let cover = 4.0 / schedule.min();
            let hs = hs_check(&built.b, e.order, &ext_grid(config, &loaded.layout)?.covering(cover), &HS_SAMPLES, &opts)?;
            let at_one = built.b.restrict(built.layout.t(), 1.0);
            let restriction = symbol_estimate(&at_one, e.order, &grid.covering(cover), &opts)?;
            CheckReport::Phg { schedule, hs, restriction }
        }
    };
    Ok(report)
}

/// `check`: the declared-class checker, with a JSON report and decay tables.
pub fn check(config: &RunConfig, name: &str) -> Result<Outcome> {
    let loaded = corpus::find(config, name)?.load(config)?;
    let report = check_loaded(config, &loaded)?;
    let pass = report.pass();
    let dir = &config.out;
    let mut files = Vec::new();
    match &report {
        CheckReport::Schwartz { decay } => files.push(write_csv(dir, &format!("{name}.check.csv"), &decay.to_csv())?),
        CheckReport::Symbol { seminorms } => {
            files.push(write_csv(dir, &format!("{name}.check.csv"), &seminorms.to_csv())?)
        }
        CheckReport::Homogeneous { .. } => {}
        CheckReport::Hs { hs } => hs_csvs(dir, &format!("{name}.check"), hs, &mut files)?,
        CheckReport::Phg { hs, restriction, .. } => {
            hs_csvs(dir, &format!("{name}.check"), hs, &mut files)?;
            files.push(write_csv(dir, &format!("{name}.check.restriction.csv"), &restriction.to_csv())?);
        }
    }
    let env = Envelope {
        command: "check",
        anchor: anchor(loaded.entry.class),
        entry: Some(name),
        seed: config.seed,
        pass,
        report: &report,
    };
    files.insert(0, write_json(dir, &format!("{name}.check.json"), &env)?);
    Ok(Outcome { pass, files })
}

#[derive(Debug, Clone, Serialize)]
pub struct TermText {
    pub j: usize,
    pub order: f64,
    pub text: String,
}

fn require(loaded: &Loaded, classes: &[Class], command: &str) -> Result<()> {
    if classes.contains(&loaded.entry.class) {
        return Ok(());
    }
    Err(CliError::Usage(format!(
        "`{command}` needs an entry of class {classes:?}, `{}` is {:?}",
        loaded.entry.name, loaded.entry.class
    )))
}

#[derive(Debug, Clone, Serialize)]
struct ExtractReport<'a> {
    m: f64,
    n: usize,
    terms: Vec<TermText>,
    hs: &'a HsReport,
}

/// `extract`: the terms `a_0..a_N` of an extension, each sampled on the grid shells.
pub fn extract(config: &RunConfig, name: &str) -> Result<Outcome> {
    let loaded = corpus::find(config, name)?.load(config)?;
    require(&loaded, &[Class::Hs], "extract")?;
    let (layout, m, n) = (&loaded.layout, loaded.entry.order, extract_depth(config, &loaded));
    let opts = config.phg_options();
    let cert = certify_hs(&loaded.expr, m, &ext_grid(config, layout)?, &opts)?;
    let ex = extract_expansion(&loaded.expr, m, n, layout, &cert, &opts)?;
    let base = layout.without_t();
    let grid = xi_grid(config, &base)?;
    let header: Vec<String> = (0..base.slots()).map(|s| base.slot_name(s)).collect();
    let dir = &config.out;
    let mut files = Vec::new();
    let mut terms = Vec::new();
    for (j, term) in ex.expansion.terms.iter().enumerate() {
        let tape = Tape::compile(&term.expr)?;
        let mut rows = Vec::new();
        for &r in grid.shells() {
            for p in grid.points_at(r, false) {
                let v = tape.eval(&p)?;
                rows.push((p, v));
            }
        }
        files.push(write_csv(dir, &format!("{name}.a{j}.csv"), &samples_csv(&header, &rows))?);
        terms.push(TermText { j, order: term.order, text: term.expr.to_dsl(&base) });
    }
    hs_csvs(dir, &format!("{name}.extract"), &cert.report, &mut files)?;
    let env = Envelope {
        command: "extract",
        anchor: "a_j = u_j(x, xi, 0) with u_{j+1} = (u_j - b_j) / t",
        entry: Some(name),
        seed: config.seed,
        pass: true,
        report: ExtractReport { m, n, terms, hs: &cert.report },
    };
    files.insert(0, write_json(dir, &format!("{name}.extract.json"), &env)?);
    Ok(Outcome { pass: true, files })
}

#[derive(Debug, Clone, Serialize)]
struct ExtendReport<'a> {
    m: f64,
    zero_extension: bool,
    schedule: &'a EpsilonSchedule,
    extension_size: usize,
    hs: &'a HsReport,
}

/// `extend`: the schedule and the extension `b` of an expansion, with its modulo-Schwartz check.
pub fn extend(config: &RunConfig, name: &str) -> Result<Outcome> {
    let loaded = corpus::find(config, name)?.load(config)?;
    require(&loaded, &[Class::Phg], "extend")?;
    let exp = loaded.expansion();
    let opts = config.check_options();
    let schedule = epsilon_schedule(&exp, &xi_grid(config, &loaded.layout)?, &opts)?;
    let built = build_extension(&exp, &schedule)?;
    let grid = ext_grid(config, &loaded.layout)?.covering(4.0 / schedule.min());
    let hs = hs_check(&built.b, exp.m, &grid, &HS_SAMPLES, &opts)?;
    let dir = &config.out;
    let terms: Vec<TermText> = exp
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| TermText { j, order: t.order, text: t.expr.to_dsl(&exp.layout) })
        .collect();
    let mut files = vec![
        write_json(dir, &format!("{name}.expansion.json"), &terms)?,
        write_json(
            dir,
            &format!("{name}.schedule.json"),
            &Envelope {
                command: "extend",
                anchor: "eps_j = min(eps_{j-1}, 1/4, 4^-j / max(1, C_j))",
                entry: Some(name),
                seed: config.seed,
                pass: true,
                report: &schedule,
            },
        )?,
    ];
    hs_csvs(dir, &format!("{name}.extend"), &hs, &mut files)?;
    let report = ExtendReport {
        m: exp.m,
        zero_extension: built.b.is_zero(),
        schedule: &schedule,
        extension_size: built.b.dag_size(),
        hs: &hs,
    };
    let env = Envelope {
        command: "extend",
        anchor: "b = sum_j t^j b_j is homogeneous modulo Schwartz of order m",
        entry: Some(name),
        seed: config.seed,
        pass: hs.pass,
        report,
    };
    files.insert(0, write_json(dir, &format!("{name}.extend.json"), &env)?);
    Ok(Outcome { pass: hs.pass, files })
}

/// Number of terms extracted past `a_0`: the configured count, raised to `m` for
/// extensions of nonnegative order so that polynomial extensions are exhausted.
pub fn extract_depth(config: &RunConfig, loaded: &Loaded) -> usize {
    config.extract_terms.max(loaded.entry.order.max(0.0) as usize)
}

/// The round-trip direction for an entry: extensions and polynomial symbols are
/// extracted and rebuilt, expansions are built and extracted.
pub fn direction(config: &RunConfig, loaded: &Loaded) -> Result<Direction> {
    let e = &loaded.entry;
    match e.class {
        Class::Hs => Ok(Direction::Extract { u: loaded.expr.clone(), m: e.order, n: extract_depth(config, loaded) }),
        Class::Phg => Ok(Direction::Build { expansion: loaded.expansion() }),
        Class::Symbol if e.order >= 0.0 && e.order.fract() == 0.0 => {
            let layout = loaded.layout.with_t();
            let u = homogenize_polynomial(&loaded.expr, e.order as u32, &layout)?;
            Ok(Direction::Extract { u, m: e.order, n: e.order as usize })
        }
        _ => Err(CliError::Usage(format!(
            "`roundtrip` needs an hs, phg or polynomial symbol entry, `{}` is {:?}",
            e.name, e.class
        ))),
    }
}

/// `roundtrip`: one direction of the expansion/extension correspondence.
pub fn roundtrip(config: &RunConfig, name: &str) -> Result<Outcome> {
    let loaded = corpus::find(config, name)?.load(config)?;
    let dir = direction(config, &loaded)?;
    let report = verify_round_trip(&dir, &loaded.layout, &config.phg_options())?;
    let out = &config.out;
    let mut files = Vec::new();
    if let Some(r) = &report.restriction {
        files.push(write_csv(out, &format!("{name}.roundtrip.csv"), &r.to_csv())?);
    }
    let env = Envelope {
        command: "roundtrip",
        anchor: "a is polyhomogeneous iff it is the restriction at t = 1 of an extension homogeneous modulo Schwartz",
        entry: Some(name),
        seed: config.seed,
        pass: report.pass,
        report: &report,
    };
    files.insert(0, write_json(out, &format!("{name}.roundtrip.json"), &env)?);
    Ok(Outcome { pass: report.pass, files })
}

