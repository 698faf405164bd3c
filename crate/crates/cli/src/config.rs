//! Run configuration, read from JSON with every field optional.

use std::path::{Path, PathBuf};

use phgcalc::grading::NormVariant;
use phgcalc::heisenberg::HeisenbergModel;
use phgcalc::phg::PhgOptions;
use phgcalc::symbol::grid::GridSpec;
use phgcalc::symbol::CheckOptions;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusEntry;
use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub r0: f64,
    pub shells: usize,
    pub base_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let spec = GridSpec::default();
        Self { r0: spec.r0, shells: spec.shells, base_points: spec.base_points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub slope: f64,
    pub drift: f64,
    pub limit: f64,
    pub tail: f64,
    pub t_switch: f64,
    pub noise_floor: f64,
    /// Largest accepted relative homogeneity violation.
    pub homogeneity: f64,
    pub k_max: usize,
    pub deriv_max: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let check = CheckOptions::default();
        let phg = PhgOptions::default();
        Self {
            slope: check.slope_tolerance,
            drift: check.drift_tolerance,
            limit: phg.limit_tolerance,
            tail: phgcalc::heisenberg::kernel::TAIL_TOLERANCE,
            t_switch: phg.t_switch,
            noise_floor: check.noise_floor,
            homogeneity: 1e-12,
            k_max: check.k_max,
            deriv_max: check.deriv_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeisenbergConfig {
    /// Model `{"d": .., "B": [[..]]}`; the three-dimensional Heisenberg group when absent.
    pub model: Option<HeisenbergModel>,
    pub points: usize,
    pub half_width: f64,
    pub bases: usize,
    /// Random `(y, eta)` pairs and group triples for the algebraic checks.
    pub samples: usize,
}

impl Default for HeisenbergConfig {
    fn default() -> Self {
        Self { model: None, points: 64, half_width: 8.0, bases: 5, samples: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Weights for added entries that do not carry their own.
    pub weights: Vec<u32>,
    pub norm: NormVariant,
    pub grid: GridConfig,
    pub tolerances: Tolerances,
    /// Names of the corpus entries in use; all of them when absent.
    pub corpus: Option<Vec<String>>,
    /// Entries added to the built-in corpus.
    pub entries: Vec<CorpusEntry>,
    pub out: PathBuf,
    pub seed: u64,
    /// Number of terms `N` for extraction.
    pub extract_terms: usize,
    pub heisenberg: HeisenbergConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            weights: vec![1, 1],
            norm: NormVariant::default(),
            grid: GridConfig::default(),
            tolerances: Tolerances::default(),
            corpus: None,
            entries: Vec::new(),
            out: PathBuf::from("reports"),
            seed: 0,
            extract_terms: 2,
            heisenberg: HeisenbergConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let named = [
            ("slope", t.slope),
            ("drift", t.drift),
            ("limit", t.limit),
            ("tail", t.tail),
            ("t_switch", t.t_switch),
            ("noise_floor", t.noise_floor),
            ("homogeneity", t.homogeneity),
            ("grid.r0", self.grid.r0),
            ("heisenberg.half_width", self.heisenberg.half_width),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(CliError::Config(format!("{name} must be positive, got {v}")));
        }
        if t.k_max < 1 {
            return Err(CliError::Config("k_max must be at least 1".into()));
        }
        if self.grid.shells < 4 || self.grid.base_points == 0 {
            return Err(CliError::Config("grid needs at least 4 shells and one base point".into()));
        }
        if self.weights.is_empty() || self.weights.contains(&0) {
            return Err(CliError::Config("weights must be positive integers".into()));
        }
        let h = &self.heisenberg;
        if h.points < 4 || !h.points.is_power_of_two() || h.bases == 0 || h.samples == 0 {
            return Err(CliError::Config(
                "heisenberg grid needs a power-of-two point count >= 4, and bases and samples must be nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn check_options(&self) -> CheckOptions {
        let t = &self.tolerances;
        CheckOptions {
            k_max: t.k_max,
            deriv_max: t.deriv_max,
            slope_tolerance: t.slope,
            drift_tolerance: t.drift,
            noise_floor: t.noise_floor,
        }
    }

    pub fn phg_options(&self) -> PhgOptions {
        PhgOptions {
            t_switch: self.tolerances.t_switch,
            check: self.check_options(),
            limit_tolerance: self.tolerances.limit,
            seed: self.seed,
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            r0: self.grid.r0,
            shells: self.grid.shells,
            base_points: self.grid.base_points,
            seed: self.seed,
            norm: self.norm,
        }
    }

    pub fn model(&self) -> HeisenbergModel {
        self.heisenberg.model.clone().unwrap_or_else(|| HeisenbergModel::heisenberg(1))
    }
}
