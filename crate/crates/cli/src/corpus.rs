//! Reference corpus of symbols, extensions and expansions in the text format.

use phgcalc::grading::Weights;
use phgcalc::phg::Expansion;
use phgcalc::symbol::{parse, Layout, SymbolExpr};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, Result};

/// Declared class of an entry, verified by the matching checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    /// Rapid decay in the frequency variables (`S^{-inf}`).
    Schwartz,
    /// `S^m`.
    Symbol,
    /// `S^m_phg`, given by its homogeneous terms.
    Phg,
    /// Homogeneous modulo Schwartz in `(xi, t)`.
    Hs,
    /// Homogeneous of degree `m` away from the origin.
    Homogeneous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    /// Expression text; unused for `phg` entries.
    #[serde(default)]
    pub source: String,
    /// Terms `a_0, a_1, ...` of a `phg` entry, of orders `m, m - 1, ...`.
    #[serde(default)]
    pub terms: Vec<String>,
    pub class: Class,
    #[serde(default)]
    pub order: f64,
    #[serde(default)]
    pub weights: Option<Vec<u32>>,
    #[serde(default)]
    pub n_x: usize,
    /// Number of decay orders for `schwartz` entries; the configured `k_max` when absent.
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub note: String,
}

/// An entry with its expressions parsed.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub entry: CorpusEntry,
    /// With a `t` slot for `hs` entries, without one otherwise.
    pub layout: Layout,
    pub expr: SymbolExpr,
    pub terms: Vec<SymbolExpr>,
}

impl Loaded {
    pub fn expansion(&self) -> Expansion {
        Expansion::on_the_nose(self.entry.order, &self.layout, self.terms.clone())
    }
}

impl CorpusEntry {
    fn new(name: &str, class: Class, order: f64, weights: &[u32], source: &str, note: &str) -> Self {
        Self {
            name: name.into(),
            source: source.into(),
            terms: Vec::new(),
            class,
            order,
            weights: Some(weights.to_vec()),
            n_x: 0,
            k_max: None,
            note: note.into(),
        }
    }

    fn expansion(name: &str, order: f64, weights: &[u32], terms: &[&str], note: &str) -> Self {
        Self { terms: terms.iter().map(|s| s.to_string()).collect(), ..Self::new(name, Class::Phg, order, weights, "", note) }
    }

    /// Parses the entry's expressions under its layout.
    pub fn load(&self, config: &RunConfig) -> Result<Loaded> {
        let rho = self.weights.clone().unwrap_or_else(|| config.weights.clone());
        let weights = Weights::new(rho).map_err(|e| CliError::Config(format!("entry `{}`: {e}", self.name)))?;
        let layout = Layout::new(self.n_x, weights, self.class == Class::Hs);
        let parse_in = |src: &str| parse(src, &layout).map_err(|source| CliError::Parse { entry: self.name.clone(), source });
        let (expr, terms) = if self.class == Class::Phg {
            let terms = self.terms.iter().map(|s| parse_in(s)).collect::<Result<Vec<_>>>()?;
            (SymbolExpr::sum(terms.iter().cloned()), terms)
        } else {
            if !self.terms.is_empty() {
                return Err(CliError::Config(format!("entry `{}`: only phg entries carry terms", self.name)));
            }
            (parse_in(&self.source)?, Vec::new())
        };
        if self.class == Class::Hs && self.order.fract() != 0.0 {
            return Err(CliError::Config(format!("entry `{}`: extension order must be an integer", self.name)));
        }
        Ok(Loaded { entry: self.clone(), layout, expr, terms })
    }
}

/// The built-in entries.
pub fn builtin() -> Vec<CorpusEntry> {
    let mut constant = CorpusEntry::new("constant", Class::Schwartz, 0.0, &[1, 1], "1", "no decay at all");
    constant.k_max = Some(1);
    vec![
        CorpusEntry::new(
            "gaussian",
            Class::Schwartz,
            0.0,
            &[1, 1],
            "(exp (- 0 (+ (^ xi1 2) (^ xi2 2))))",
            "Gaussian in the frequency variables",
        ),
        constant,
        CorpusEntry::new(
            "sigma_j",
            Class::Symbol,
            1.0,
            &[2, 1, 1],
            "xi2",
            "first-layer frequency under Heisenberg weights, in the sigma frame",
        ),
        CorpusEntry::new(
            "norm_power",
            Class::Homogeneous,
            2.0,
            &[2, 1],
            "(qnorm 2)",
            "smooth quasi-norm squared",
        ),
        CorpusEntry::new(
            "weighted_polynomial",
            Class::Symbol,
            2.0,
            &[1, 2],
            "(+ 1 (^ xi1 2) xi2)",
            "polynomial of weighted degree 2",
        ),
        CorpusEntry::new(
            "worked",
            Class::Hs,
            2.0,
            &[1, 1],
            "(+ (^ t 2) (^ xi1 2) (^ xi2 2))",
            "t^2 + |xi|^2",
        ),
        CorpusEntry::new(
            "weighted_hs",
            Class::Hs,
            2.0,
            &[1, 2],
            "(+ (^ t 2) (^ xi1 2) xi2)",
            "homogenization of 1 + xi1^2 + xi2 at order 2",
        ),
        CorpusEntry::new(
            "cubic_hs",
            Class::Hs,
            3.0,
            &[1, 1],
            "(+ (^ t 3) (* xi1 (^ t 2)) (* xi1 (^ xi2 2)))",
            "homogenization of 1 + xi1 + xi1 xi2^2 at order 3",
        ),
        CorpusEntry::expansion(
            "e2",
            2.0,
            &[1, 1],
            &["(qnorm 2)", "xi1", "(/ (^ xi2 2) (qnorm 2))"],
            "isotropic, orders 2, 1, 0",
        ),
        CorpusEntry::expansion(
            "e1",
            1.0,
            &[2, 1],
            &["(qnorm 1)", "(* xi2 (qnorm -1))", "(/ xi1 (qnorm 3))"],
            "weights (2, 1), orders 1, 0, -1",
        ),
        CorpusEntry::expansion(
            "e0",
            0.0,
            &[1, 1, 1],
            &[
                "1",
                "(/ xi1 (qnorm 2))",
                "(/ (* xi2 xi3) (qnorm 4))",
                "(qnorm -3)",
                "(/ (^ xi1 2) (qnorm 6))",
                "(/ xi3 (qnorm 6))",
            ],
            "three frequencies, six terms of orders 0 down to -5",
        ),
        CorpusEntry::expansion("empty", 0.0, &[1, 1], &[], "no terms"),
    ]
}

/// Built-in and configured entries, filtered by the configured selection.
pub fn select(config: &RunConfig) -> Result<Vec<CorpusEntry>> {
    let mut all = builtin();
    for e in &config.entries {
        if all.iter().any(|b| b.name == e.name) {
            return Err(CliError::Config(format!("duplicate corpus entry `{}`", e.name)));
        }
        all.push(e.clone());
    }
    let Some(names) = &config.corpus else { return Ok(all) };
    names
        .iter()
        .map(|n| {
            all.iter().find(|e| &e.name == n).cloned().ok_or_else(|| CliError::Usage(format!("unknown corpus entry `{n}`")))
        })
        .collect()
}

pub fn find(config: &RunConfig, name: &str) -> Result<CorpusEntry> {
    select(config)?
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::Usage(format!("no corpus entry named `{name}`")))
}
