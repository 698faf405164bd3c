//! Continuous Fourier transforms on uniform tensor grids.
//!
//! On an axis with `N` points `x_i = -L + i h`, `h = 2L/N`, the frequencies are
//! `xi_m = (m - N/2) 2 pi / (N h)`. The forward transform approximates
//! `F f(xi) = int f(x) e^{-i x xi} dx` and the inverse
//! `f(x) = (2 pi)^{-D} int F(xi) e^{i x xi} dxi`; the discrete pair is exactly inverse.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{HeisenbergError, Result};

/// Recorded transform convention.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DftConvention {
    /// Sign of the exponent in the forward transform.
    pub forward_sign: i8,
    /// Where the `2 pi` normalization sits.
    pub two_pi: String,
}

impl Default for DftConvention {
    fn default() -> Self {
        Self { forward_sign: -1, two_pi: "inverse:(2pi)^-D".into() }
    }
}

impl DftConvention {
    pub fn validate(&self) -> Result<()> {
        if *self != DftConvention::default() {
            return Err(HeisenbergError::Convention(format!(
                "expected forward sign -1 with (2pi)^-D on the inverse, found {self:?}"
            )));
        }
        Ok(())
    }
}

/// Uniform tensor grid, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: Vec<usize>,
    pub half_width: Vec<f64>,
}

impl Grid {
    pub fn new(n: Vec<usize>, half_width: Vec<f64>) -> Result<Self> {
        if n.is_empty() || n.len() != half_width.len() {
            return Err(HeisenbergError::InvalidGrid("shape and box must have the same nonzero length".into()));
        }
        if let Some(bad) = n.iter().find(|&&k| k < 4 || !k.is_power_of_two()) {
            return Err(HeisenbergError::InvalidGrid(format!("sizes must be powers of two >= 4, got {bad}")));
        }
        if let Some(bad) = half_width.iter().find(|&&l| !(l > 0.0) || !l.is_finite()) {
            return Err(HeisenbergError::InvalidGrid(format!("box half-width must be positive, got {bad}")));
        }
        Ok(Self { n, half_width })
    }

    /// `n^dim` points on `[-half_width, half_width)^dim`.
    pub fn cube(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![n; dim], vec![half_width; dim])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.half_width[axis] / self.n[axis] as f64
    }

    pub fn freq_spacing(&self, axis: usize) -> f64 {
        2.0 * std::f64::consts::PI / (self.n[axis] as f64 * self.spacing(axis))
    }

    pub fn position(&self, axis: usize, i: usize) -> f64 {
        -self.half_width[axis] + i as f64 * self.spacing(axis)
    }

    pub fn frequency(&self, axis: usize, m: usize) -> f64 {
        (m as f64 - (self.n[axis] / 2) as f64) * self.freq_spacing(axis)
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.n[a];
            flat /= self.n[a];
        }
        idx
    }

    pub fn positions_at(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(a, &i)| self.position(a, i)).collect()
    }

    pub fn frequencies_at(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().enumerate().map(|(a, &m)| self.frequency(a, m)).collect()
    }

    /// Cell volume `prod h`.
    pub fn cell(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    fn on_boundary(&self, mut flat: usize) -> bool {
        for &n in self.n.iter().rev() {
            let i = flat % n;
            if i == 0 || i == n - 1 {
                return true;
            }
            flat /= n;
        }
        false
    }

    fn index_sum(&self, mut flat: usize) -> usize {
        let mut acc = 0;
        for &n in self.n.iter().rev() {
            acc += flat % n;
            flat /= n;
        }
        acc
    }

    /// Largest modulus on the outermost index planes relative to the largest overall.
    pub fn boundary_tail(&self, data: &[Complex64]) -> f64 {
        let peak = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let edge = (0..data.len())
            .into_par_iter()
            .filter(|&f| self.on_boundary(f))
            .map(|f| data[f].norm())
            .reduce(|| 0.0, f64::max);
        edge / peak
    }
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Applies `op` to every line along `axis`.
pub(crate) fn map_lines<F>(n: &[usize], data: &mut [Complex64], axis: usize, op: F)
where
    F: Fn(usize, &mut Vec<Complex64>) + Sync,
{
    let len = n[axis];
    let stride: usize = n[axis + 1..].iter().product();
    let outer: usize = n[..axis].iter().product();
    let lines: Vec<(usize, Vec<Complex64>)> = (0..outer * stride)
        .into_par_iter()
        .map(|line| {
            let (o, s) = (line / stride, line % stride);
            let base = o * len * stride + s;
            let mut buf: Vec<Complex64> = (0..len).map(|i| data[base + i * stride]).collect();
            op(line, &mut buf);
            (base, buf)
        })
        .collect();
    for (base, buf) in lines {
        for (i, v) in buf.into_iter().enumerate() {
            data[base + i * stride] = v;
        }
    }
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut p = FftPlanner::new();
    if inverse {
        p.plan_fft_inverse(n)
    } else {
        p.plan_fft_forward(n)
    }
}

fn checkerboard(grid: &Grid, data: &mut [Complex64], factor: f64) {
    data.par_iter_mut().enumerate().for_each(|(f, z)| {
        *z *= factor * sign(grid.index_sum(f));
    });
}

/// Samples of `int f(x) e^{-i x xi} dx` at the grid frequencies.
pub fn forward(grid: &Grid, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    checkerboard(grid, &mut out, 1.0);
    for a in 0..grid.dim() {
        let fft = plan(grid.n[a], false);
        map_lines(&grid.n, &mut out, a, |_, buf| fft.process(buf));
    }
    checkerboard(grid, &mut out, grid.cell());
    out
}

/// Samples of `(2 pi)^{-D} int F(xi) e^{i x xi} dxi` at the grid positions.
pub fn inverse(grid: &Grid, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = data.to_vec();
    checkerboard(grid, &mut out, 1.0);
    for a in 0..grid.dim() {
        let fft = plan(grid.n[a], true);
        map_lines(&grid.n, &mut out, a, |_, buf| fft.process(buf));
    }
    let scale = 1.0 / (grid.len() as f64 * grid.cell());
    checkerboard(grid, &mut out, scale);
    out
}

/// One-dimensional versions on a line of `grid` along `axis`.
fn forward_line(grid: &Grid, axis: usize, fft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
    for (i, z) in buf.iter_mut().enumerate() {
        *z *= sign(i);
    }
    fft.process(buf);
    let h = grid.spacing(axis);
    for (m, z) in buf.iter_mut().enumerate() {
        *z *= h * sign(m);
    }
}

fn inverse_line(grid: &Grid, axis: usize, ifft: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
    for (m, z) in buf.iter_mut().enumerate() {
        *z *= sign(m);
    }
    ifft.process(buf);
    let scale = 1.0 / (grid.n[axis] as f64 * grid.spacing(axis));
    for (i, z) in buf.iter_mut().enumerate() {
        *z *= scale * sign(i);
    }
}

/// `data(x) -> data(x + shift(line) e_axis)` per line, by band-limited (periodic) interpolation.
pub fn shift_lines<S>(grid: &Grid, data: &mut [Complex64], axis: usize, shift: S)
where
    S: Fn(usize) -> f64 + Sync,
{
    let fft = plan(grid.n[axis], false);
    let ifft = plan(grid.n[axis], true);
    map_lines(&grid.n, data, axis, |line, buf| {
        let d = shift(line);
        if d == 0.0 {
            return;
        }
        forward_line(grid, axis, &fft, buf);
        for (m, z) in buf.iter_mut().enumerate() {
            *z *= Complex64::from_polar(1.0, d * grid.frequency(axis, m));
        }
        inverse_line(grid, axis, &ifft, buf);
    });
}
