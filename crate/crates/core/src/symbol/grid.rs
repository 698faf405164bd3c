//! Dyadic shell grids on the unit quasi-sphere.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::expr::Frame;
use super::{Result, SymbolError};
use crate::grading::{NormVariant, QuasiNorm};

/// Sample points `(x, delta_r(omega))` for base points `x`, shell radii `r`
/// and unit directions `omega`.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationGrid {
    base_points: Vec<Vec<f64>>,
    shells: Vec<f64>,
    inner_radii: Vec<f64>,
    directions: Vec<Vec<f64>>,
    #[serde(skip)]
    frame: Frame,
    fixed: Vec<(usize, f64)>,
    slots: usize,
}

/// Grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub r0: f64,
    pub shells: usize,
    pub base_points: usize,
    pub seed: u64,
    /// Quasi-norm defining the unit sphere of directions.
    pub norm: NormVariant,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { r0: 1.0, shells: 10, base_points: 5, seed: 0, norm: NormVariant::Smooth }
    }
}

impl EvaluationGrid {
    /// Grid over `n_x` leading base coordinates and the slots of `frame`.
    pub fn new(n_x: usize, frame: &Frame, spec: GridSpec) -> Result<Self> {
        if !(spec.r0 > 0.0) || spec.base_points == 0 {
            return Err(SymbolError::InvalidParameter("grid needs r0 > 0 and a base point".into()));
        }
        if frame.offset < n_x {
            return Err(SymbolError::InvalidParameter("frame overlaps the base coordinates".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let dim = frame.dim();
        let q = QuasiNorm::new(frame.weights.clone(), spec.norm);
        let mut directions = Vec::with_capacity(2 * dim * dim);
        for k in 0..dim {
            for sign in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[k] = sign;
                directions.push(v);
            }
        }
        while directions.len() < 2 * dim * dim {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if v.iter().map(|c| c * c).sum::<f64>() < 1e-4 {
                continue;
            }
            directions.push(q.normalize(&v)?);
        }
        let mut base_points = vec![vec![0.0; n_x]];
        if n_x > 0 {
            for _ in 1..spec.base_points {
                base_points.push((0..n_x).map(|_| rng.gen_range(-1.0..1.0)).collect());
            }
        }
        let shells = (0..=spec.shells).map(|i| spec.r0 * 2f64.powi(i as i32)).collect();
        Ok(Self {
            base_points,
            shells,
            inner_radii: vec![0.0, 0.25 * spec.r0, 0.5 * spec.r0],
            directions,
            frame: frame.clone(),
            fixed: Vec::new(),
            slots: frame.offset + dim,
        })
    }

    /// Standard grid: `r0 = 1`, shells `2^0..2^10`, `2D^2` directions, 5 base points.
    pub fn standard(n_x: usize, frame: &Frame, seed: u64) -> Result<Self> {
        Self::new(n_x, frame, GridSpec { seed, ..GridSpec::default() })
    }

    /// Extends the shells until the outermost one lies beyond `radius`.
    pub fn covering(mut self, radius: f64) -> Self {
        while *self.shells.last().expect("shells") <= radius {
            let next = 2.0 * self.shells.last().expect("shells");
            self.shells.push(next);
        }
        self
    }

    /// Holds `slot` at `value` in every point, e.g. a `t` slot outside the frame.
    pub fn with_fixed(mut self, slot: usize, value: f64) -> Self {
        self.fixed.push((slot, value));
        self.slots = self.slots.max(slot + 1);
        self
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn shells(&self) -> &[f64] {
        &self.shells
    }

    pub fn inner_radii(&self) -> &[f64] {
        &self.inner_radii
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn base_points(&self) -> &[Vec<f64>] {
        &self.base_points
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    /// The point with base `x`, frame block `delta_r(omega)`.
    pub fn point(&self, x: &[f64], r: f64, omega: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.slots];
        p[..x.len()].copy_from_slice(x);
        for (k, (&w, &o)) in self.frame.weights.rho().iter().zip(omega).enumerate() {
            p[self.frame.offset + k] = r.powi(w as i32) * o;
        }
        for &(slot, v) in &self.fixed {
            p[slot] = v;
        }
        p
    }

    /// All points at radius `r`; a single base point when `all_bases` is false.
    pub fn points_at(&self, r: f64, all_bases: bool) -> Vec<Vec<f64>> {
        let bases = if all_bases { &self.base_points[..] } else { &self.base_points[..1] };
        let mut out = Vec::with_capacity(bases.len() * self.directions.len());
        for x in bases {
            for omega in &self.directions {
                out.push(self.point(x, r, omega));
            }
        }
        out
    }
}
