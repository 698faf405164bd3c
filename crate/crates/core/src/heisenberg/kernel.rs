//! Sampled kernels, Kohn-Nirenberg quantization, the chart push-forward and the zoom intertwining.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{alpha, alpha_tilde, exp_chart, exp_chart_inverse, ChartPoint};
use super::fourier::{self, map_lines, DftConvention, Grid};
use super::model::{heis_dilate, HeisenbergModel};
use super::{HeisenbergError, Result};
use crate::phg::homogenize::expand;
use crate::symbol::{SymbolExpr, Tape};

/// Largest boundary-layer modulus, relative to the peak, treated as zero.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Largest grid for the quadratic-cost quantization path.
pub const DIRECT_LIMIT: usize = 4096;

/// What the samples of a [`KernelGrid`] slice hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sampling {
    /// `k(y, y - w)` at fiber points `w`.
    Difference,
    /// `k~(y, v)` in exponential coordinates at `t = 1`.
    Chart,
    /// `f(y, xi)` at grid frequencies.
    Frequency,
}

/// Resampling along the central axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Interpolation {
    /// Band-limited shift by a phase in the axis transform.
    #[default]
    Spectral,
    /// Cubic Lagrange on four neighbours, zero outside the box.
    Tricubic,
}

/// Samples of a function of `(y, .)` on a fiber grid, one slice per base point `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid {
    pub grid: Grid,
    pub bases: Vec<Vec<f64>>,
    pub sampling: Sampling,
    pub values: Vec<Vec<Complex64>>,
    pub convention: DftConvention,
}

#[derive(Serialize, Deserialize)]
struct Header {
    shape: Vec<usize>,
    #[serde(rename = "box")]
    half_width: Vec<f64>,
    convention: DftConvention,
    sampling: Sampling,
    bases: Vec<Vec<f64>>,
}

impl KernelGrid {
    /// The origin followed by `count - 1` seeded points of `[-1, 1]^{d+1}`.
    pub fn default_bases(m: &HeisenbergModel, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|i| {
                if i == 0 {
                    vec![0.0; m.dim()]
                } else {
                    (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect()
                }
            })
            .collect()
    }

    /// `64` points per axis on `[-8, 8]`.
    pub fn default_grid(m: &HeisenbergModel) -> Grid {
        Grid::cube(m.dim(), 64, 8.0).expect("valid default grid")
    }

    /// Flat binary: little-endian `u64` header length, JSON header, then `(re, im)` `f64` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            shape: self.grid.n.clone(),
            half_width: self.grid.half_width.clone(),
            convention: self.convention.clone(),
            sampling: self.sampling,
            bases: self.bases.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out = (json.len() as u64).to_le_bytes().to_vec();
        out.extend(json);
        for z in self.values.iter().flatten() {
            out.extend(z.re.to_le_bytes());
            out.extend(z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |s: &str| HeisenbergError::Format(s.into());
        let len = bytes.get(..8).ok_or_else(|| fail("missing header length"))?;
        let len = u64::from_le_bytes(len.try_into().expect("eight bytes")) as usize;
        let json = bytes.get(8..8 + len).ok_or_else(|| fail("truncated header"))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| HeisenbergError::Format(e.to_string()))?;
        header.convention.validate()?;
        let grid = Grid::new(header.shape, header.half_width)?;
        let body = &bytes[8 + len..];
        if body.len() != 16 * grid.len() * header.bases.len() {
            return Err(fail("sample count does not match the header"));
        }
        let flat: Vec<Complex64> = body
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("eight bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("eight bytes"));
                Complex64::new(re, im)
            })
            .collect();
        let values = flat.chunks(grid.len()).map(<[Complex64]>::to_vec).collect();
        Ok(Self { grid, bases: header.bases, sampling: header.sampling, values, convention: header.convention })
    }
}

fn check_grid(m: &HeisenbergModel, grid: &Grid) -> Result<()> {
    if grid.dim() != m.dim() {
        return Err(HeisenbergError::Dimension { expected: m.dim(), got: grid.dim() });
    }
    Ok(())
}

fn check_bases(m: &HeisenbergModel, bases: &[Vec<f64>]) -> Result<()> {
    match bases.iter().find(|y| y.len() != m.dim()) {
        Some(y) => Err(HeisenbergError::Dimension { expected: m.dim(), got: y.len() }),
        None => Ok(()),
    }
}

fn guard_tail(what: &str, tail: f64, tolerance: f64) -> Result<()> {
    if tail > tolerance {
        return Err(HeisenbergError::Tail { what: what.into(), tail, tolerance });
    }
    Ok(())
}

fn sample<F>(e: &SymbolExpr, len: usize, point: F) -> Result<Vec<Complex64>>
where
    F: Fn(usize) -> Vec<f64> + Sync,
{
    let tape = Tape::compile(e)?;
    (0..len)
        .into_par_iter()
        .map_init(|| tape.workspace(), |w, i| Ok(Complex64::new(tape.eval_with(w, &point(i))?, 0.0)))
        .collect()
}

fn linf(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `Op(q) phi (x) = (2 pi)^{-(d+1)} int e^{i x.xi} q(x, xi) phi^(xi) dxi` at the grid positions.
///
/// `q` lives on the model layout and `phi` on its position slots. Symbols free of
/// `x` take one transform; symbols polynomial in `xi` take one per monomial;
/// anything else is summed directly on grids of at most [`DIRECT_LIMIT`] points.
pub fn quantize(m: &HeisenbergModel, q: &SymbolExpr, phi: &SymbolExpr, grid: &Grid) -> Result<Vec<Complex64>> {
    check_grid(m, grid)?;
    let (dim, len) = (m.dim(), grid.len());
    let pos = |i: usize| {
        let mut p = grid.positions_at(i);
        p.resize(2 * dim, 0.0);
        p
    };
    let phi_s = sample(phi, len, pos)?;
    guard_tail("test function at the box boundary", grid.boundary_tail(&phi_s), TAIL_TOLERANCE)?;
    let hat = fourier::forward(grid, &phi_s);
    guard_tail("test function spectrum at the band edge", grid.boundary_tail(&hat), TAIL_TOLERANCE)?;

    if (0..dim).all(|k| !q.depends_on(k)) {
        let qs = sample(q, len, |i| {
            let mut p = vec![0.0; dim];
            p.extend(grid.frequencies_at(i));
            p
        })?;
        let prod: Vec<Complex64> = hat.iter().zip(&qs).map(|(a, b)| a * b).collect();
        return Ok(fourier::inverse(grid, &prod));
    }

    if let Ok(poly) = expand(q, &m.layout()) {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        for (powers, coef) in poly {
            let mono: Vec<Complex64> = hat
                .par_iter()
                .enumerate()
                .map(|(i, h)| {
                    let xi = grid.frequencies_at(i);
                    h * xi.iter().zip(&powers).map(|(x, &p)| x.powi(p as i32)).product::<f64>()
                })
                .collect();
            let term = fourier::inverse(grid, &mono);
            let c = sample(&coef, len, pos)?;
            out.par_iter_mut().zip(term.par_iter().zip(&c)).for_each(|(o, (t, c))| *o += t * c);
        }
        return Ok(out);
    }

    if len > DIRECT_LIMIT {
        return Err(HeisenbergError::Unsupported(format!(
            "symbol is neither x-free nor polynomial in xi; direct summation is limited to {DIRECT_LIMIT} points, grid has {len}"
        )));
    }
    let tape = Tape::compile(q)?;
    let cell: f64 = (0..dim).map(|a| grid.freq_spacing(a) / (2.0 * std::f64::consts::PI)).product();
    (0..len)
        .into_par_iter()
        .map_init(
            || tape.workspace(),
            |w, i| {
                let x = grid.positions_at(i);
                let mut acc = Complex64::new(0.0, 0.0);
                for (mi, h) in hat.iter().enumerate() {
                    let xi = grid.frequencies_at(mi);
                    let mut p = x.clone();
                    p.extend(&xi);
                    let phase: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
                    acc += Complex64::from_polar(tape.eval_with(w, &p)?, phase) * h;
                }
                Ok(acc * cell)
            },
        )
        .collect()
}

/// Samples of `e(y, xi, extra)` on the grid frequencies, one slice per base point.
fn symbol_slices(e: &SymbolExpr, grid: &Grid, bases: &[Vec<f64>], extra: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    bases
        .iter()
        .map(|y| {
            sample(e, grid.len(), |i| {
                let mut p = y.clone();
                p.extend(grid.frequencies_at(i));
                p.extend(extra);
                p
            })
        })
        .collect()
}

/// `k(y, y - w) = F_2^{-1}(q)(y, w)` for each base point `y`.
pub fn kernel_from_symbol(m: &HeisenbergModel, q: &SymbolExpr, grid: &Grid, bases: &[Vec<f64>]) -> Result<KernelGrid> {
    check_grid(m, grid)?;
    check_bases(m, bases)?;
    let qs = symbol_slices(q, grid, bases, &[])?;
    let mut values = Vec::with_capacity(bases.len());
    for s in &qs {
        guard_tail("symbol at the frequency band edge", grid.boundary_tail(s), TAIL_TOLERANCE)?;
        values.push(fourier::inverse(grid, s));
    }
    Ok(KernelGrid {
        grid: grid.clone(),
        bases: bases.to_vec(),
        sampling: Sampling::Difference,
        values,
        convention: DftConvention::default(),
    })
}

fn cubic_shift(buf: &mut [Complex64], offset: f64) {
    let n = buf.len() as i64;
    let old = buf.to_vec();
    let at = |j: i64| if (0..n).contains(&j) { old[j as usize] } else { Complex64::new(0.0, 0.0) };
    for (i, out) in buf.iter_mut().enumerate() {
        let p = i as f64 + offset;
        let j = p.floor();
        let f = p - j;
        let j = j as i64;
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        *out = (0..4).map(|k| at(j - 1 + k as i64) * w[k]).sum();
    }
}

/// Replaces `g(w)` by `g(w_0 + sign c(y).w', w')`.
fn shear(m: &HeisenbergModel, grid: &Grid, y: &[f64], data: &mut [Complex64], sign: f64, interp: Interpolation) {
    let c = m.half_b(y);
    let offset = |mut line: usize| {
        let mut acc = 0.0;
        for a in (1..grid.dim()).rev() {
            acc += c[a - 1] * grid.position(a, line % grid.n[a]);
            line /= grid.n[a];
        }
        sign * acc
    };
    match interp {
        Interpolation::Spectral => fourier::shift_lines(grid, data, 0, offset),
        Interpolation::Tricubic => {
            let h = grid.spacing(0);
            map_lines(&grid.n, data, 0, |line, buf| cubic_shift(buf, offset(line) / h));
        }
    }
}

fn transport(
    m: &HeisenbergModel,
    k: &KernelGrid,
    from: Sampling,
    to: Sampling,
    sign: f64,
    interp: Interpolation,
    tail_tolerance: f64,
) -> Result<KernelGrid> {
    check_grid(m, &k.grid)?;
    check_bases(m, &k.bases)?;
    k.convention.validate()?;
    if k.sampling != from {
        return Err(HeisenbergError::InvalidGrid(format!("expected {from:?} samples, found {:?}", k.sampling)));
    }
    let mut values = k.values.clone();
    for (y, v) in k.bases.iter().zip(values.iter_mut()) {
        guard_tail("kernel at the box boundary", k.grid.boundary_tail(v), tail_tolerance)?;
        shear(m, &k.grid, y, v, sign, interp);
    }
    Ok(KernelGrid { values, sampling: to, ..k.clone() })
}

/// `k~(y, v) = k(y, phi_y(v) + y)`, i.e. `k(y, y - w)` at `w = (v_0 + c(y).v', v')`.
///
/// Values are read as zero outside the box, which requires the boundary tail of
/// every slice to be at most `tail_tolerance`.
pub fn pushforward_chart_t1(
    m: &HeisenbergModel,
    k: &KernelGrid,
    interp: Interpolation,
    tail_tolerance: f64,
) -> Result<KernelGrid> {
    transport(m, k, Sampling::Difference, Sampling::Chart, 1.0, interp, tail_tolerance)
}

/// Inverse of [`pushforward_chart_t1`].
pub fn pullback_chart_t1(
    m: &HeisenbergModel,
    k: &KernelGrid,
    interp: Interpolation,
    tail_tolerance: f64,
) -> Result<KernelGrid> {
    transport(m, k, Sampling::Chart, Sampling::Difference, -1.0, interp, tail_tolerance)
}

/// Closure of the square `f -> q = f o sigma -> k -> k~ -> F_2 k~` against `f`.
#[derive(Debug, Clone, Serialize)]
pub struct DiagramReport {
    pub check: &'static str,
    pub d: usize,
    pub shape: Vec<usize>,
    pub half_width: Vec<f64>,
    pub bases: Vec<Vec<f64>>,
    pub interpolation: Interpolation,
    pub convention: DftConvention,
    /// Max `|F_2 k~ - f|` per base point.
    pub per_slice: Vec<f64>,
    /// Largest boundary-layer modulus of the sampled kernels relative to their peak.
    pub kernel_tail: f64,
    /// Max `|F_2 k~ - f| / max |f|` over all slices.
    pub diagram_linf: f64,
}

/// Runs `f` around the chart diagram. `f` lives on the model layout.
pub fn chart_diagram_check(
    m: &HeisenbergModel,
    f: &SymbolExpr,
    grid: &Grid,
    bases: &[Vec<f64>],
    interp: Interpolation,
) -> Result<DiagramReport> {
    check_grid(m, grid)?;
    check_bases(m, bases)?;
    let q = m.sigma_pullback(f, &m.layout());
    let fs = symbol_slices(f, grid, bases, &[])?;
    let qs = symbol_slices(&q, grid, bases, &[])?;
    let (mut per_slice, mut kernel_tail, mut fmax) = (Vec::new(), 0.0f64, 0.0f64);
    for ((y, fv), qv) in bases.iter().zip(&fs).zip(&qs) {
        guard_tail("symbol at the frequency band edge", grid.boundary_tail(qv), TAIL_TOLERANCE)?;
        let mut k = fourier::inverse(grid, qv);
        kernel_tail = kernel_tail.max(grid.boundary_tail(&k));
        shear(m, grid, y, &mut k, 1.0, interp);
        let back = fourier::forward(grid, &k);
        per_slice.push(back.iter().zip(fv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max));
        fmax = fmax.max(linf(fv));
    }
    let worst = per_slice.iter().copied().fold(0.0, f64::max);
    Ok(DiagramReport {
        check: "chart push-forward Fourier diagram",
        d: m.d(),
        shape: grid.n.clone(),
        half_width: grid.half_width.clone(),
        bases: bases.to_vec(),
        interpolation: interp,
        convention: DftConvention::default(),
        per_slice,
        kernel_tail,
        diagram_linf: if fmax > 0.0 { worst / fmax } else { worst },
    })
}

/// Deviation of `F_2 alpha~_{s*} F_2^{-1} u` from `beta_s^* u`.
#[derive(Debug, Clone, Serialize)]
pub struct ZoomReport {
    pub check: &'static str,
    pub d: usize,
    pub s: f64,
    pub shape: Vec<usize>,
    pub enlarged_shape: Vec<usize>,
    pub half_width: Vec<f64>,
    pub bases: Vec<Vec<f64>>,
    pub t_slices: Vec<f64>,
    /// Max deviation per `(base, t)` pair, base-major.
    pub per_slice: Vec<f64>,
    /// Max coordinate gap between `Exp^{-1} alpha_s Exp` and `alpha~_s` on sample points.
    pub chart_residual: f64,
    /// Max deviation over all slices relative to `max |beta_s^* u|`.
    pub zoom_linf: f64,
}

/// Max gap between the zoom action read through the exponential chart and its closed form.
pub fn zoom_chart_residual(m: &HeisenbergModel, bases: &[Vec<f64>], s: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for y in bases {
        for &t in &[0.0, 0.5, -1.25, 2.0] {
            let v: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = ChartPoint { y: y.clone(), v: v.clone(), t };
            let via = exp_chart_inverse(m, &alpha(s, &exp_chart(m, y, &v, t)));
            let direct = alpha_tilde(s, &p);
            let gap = via.v.iter().zip(&direct.v).map(|(a, b)| (a - b).abs()).fold((via.t - direct.t).abs(), f64::max);
            worst = worst.max(gap);
        }
    }
    worst
}

/// Row-major `N x N` matrix taking frequency samples of `g` along `axis` to the
/// transform of `z -> g(z / scale)` at the same frequencies, with the inverse
/// evaluated on `count` points of spacing `h` and zero outside the box.
fn zoom_operator(grid: &Grid, axis: usize, scale: f64, count: usize) -> Vec<Complex64> {
    let (n, h, l) = (grid.n[axis], grid.spacing(axis), grid.half_width[axis]);
    let big_l = count as f64 * h / 2.0;
    let inside: Vec<f64> = (0..count)
        .map(|p| -big_l + p as f64 * h)
        .filter(|v| (-l..l).contains(&(v / scale)))
        .collect();
    let mut op = vec![Complex64::new(0.0, 0.0); n * n];
    op.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
        let xi_m = grid.frequency(axis, m);
        for (k, t) in row.iter_mut().enumerate() {
            let w = grid.frequency(axis, k) / scale - xi_m;
            *t = inside.iter().map(|v| Complex64::from_polar(1.0, v * w)).sum::<Complex64>() / n as f64;
        }
    });
    op
}

/// Checks the zoom intertwining on slices of `u(x, xi, t)` (model layout with a `t` slot).
///
/// `F_2^{-1} u(y, ., s t)` is dilated by `delta_{1/s}` with the Jacobian `s^{-Q}`,
/// `Q = d + 2`, sampled on a grid of the same spacing enlarged by `s^{rho_a}` per axis,
/// transformed forward and compared with `u(y, delta_s xi, s t)` on the original frequencies.
/// The three steps are separable and applied as one dense matrix per axis.
pub fn zoom_intertwining_check(
    m: &HeisenbergModel,
    u: &SymbolExpr,
    grid: &Grid,
    bases: &[Vec<f64>],
    t_slices: &[f64],
    s: f64,
) -> Result<ZoomReport> {
    check_grid(m, grid)?;
    check_bases(m, bases)?;
    if !(s > 0.0) || !s.is_finite() {
        return Err(HeisenbergError::InvalidModel(format!("zoom factor must be positive, got {s}")));
    }
    let dim = m.dim();
    let rho: Vec<i32> = (0..dim).map(|a| if a == 0 { 2 } else { 1 }).collect();
    let big_n: Vec<usize> = (0..dim)
        .map(|a| ((grid.n[a] as f64 * s.powi(rho[a])).ceil() as usize).next_power_of_two().max(grid.n[a]))
        .collect();
    let jacobian = s.powi(-(m.d() as i32 + 2));
    let ops: Vec<Vec<Complex64>> = (0..dim).map(|a| zoom_operator(grid, a, s.powi(rho[a]), big_n[a])).collect();
    let tape = Tape::compile(u)?;

    let (mut per_slice, mut rmax) = (Vec::new(), 0.0f64);
    for y in bases {
        for &t in t_slices {
            let spec = symbol_slices(u, grid, std::slice::from_ref(y), &[s * t])?.remove(0);
            guard_tail("symbol at the frequency band edge", grid.boundary_tail(&spec), TAIL_TOLERANCE)?;
            let mut data = spec;
            for (a, op) in ops.iter().enumerate() {
                let n = grid.n[a];
                map_lines(&grid.n, &mut data, a, |_, buf| {
                    let src = buf.clone();
                    for (m, out) in buf.iter_mut().enumerate() {
                        *out = op[m * n..(m + 1) * n].iter().zip(&src).map(|(t, g)| t * g).sum::<Complex64>();
                    }
                });
            }
            let rows: Vec<(f64, f64)> = (0..grid.len())
                .into_par_iter()
                .map_init(
                    || tape.workspace(),
                    |w, i| {
                        let mut p = y.clone();
                        p.extend(heis_dilate(s, &grid.frequencies_at(i)));
                        p.push(s * t);
                        let r = tape.eval_with(w, &p)?;
                        Ok(((data[i] * jacobian - r).norm(), r.abs()))
                    },
                )
                .collect::<Result<_>>()?;
            per_slice.push(rows.iter().map(|r| r.0).fold(0.0, f64::max));
            rmax = rmax.max(rows.iter().map(|r| r.1).fold(0.0, f64::max));
        }
    }
    let worst = per_slice.iter().copied().fold(0.0, f64::max);
    Ok(ZoomReport {
        check: "zoom intertwining under the fiberwise Fourier transform",
        d: m.d(),
        s,
        shape: grid.n.clone(),
        enlarged_shape: big_n,
        half_width: grid.half_width.clone(),
        bases: bases.to_vec(),
        t_slices: t_slices.to_vec(),
        per_slice,
        chart_residual: zoom_chart_residual(m, bases, s, 0),
        zoom_linf: if rmax > 0.0 { worst / rmax } else { worst },
    })
}
