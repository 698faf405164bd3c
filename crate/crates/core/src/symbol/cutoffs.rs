//! Smooth cutoffs glued from `g(r) = exp(-1/r)`.
//!
//! Every profile is a rational expression in glue values, so plateaus are exact:
//! the step equals `1` (and all its derivatives `0`) as soon as `g(1 - r)`
//! vanishes.

use super::expr::{Frame, Layout, SymbolExpr};

/// `g(r) / (g(r) + g(1 - r))`: `0` for `r <= 0`, `1` for `r >= 1`.
pub fn step(r: &SymbolExpr) -> SymbolExpr {
    let a = r.glue();
    let b = (1.0 - r.clone()).glue();
    a.div(&a.add(&b))
}

/// `1 - step(r)`, written so that both plateaus are exact.
pub fn step_complement(r: &SymbolExpr) -> SymbolExpr {
    let a = r.glue();
    let b = (1.0 - r.clone()).glue();
    b.div(&a.add(&b))
}

/// `1` on `|t| <= inner`, `0` on `|t| >= outer`.
pub fn plateau(t: &SymbolExpr, inner: f64, outer: f64) -> SymbolExpr {
    step(&radial_ramp(t, inner, outer))
}

/// `0` on `|t| <= inner`, `1` on `|t| >= outer`.
pub fn plateau_complement(t: &SymbolExpr, inner: f64, outer: f64) -> SymbolExpr {
    step_complement(&radial_ramp(t, inner, outer))
}

fn radial_ramp(t: &SymbolExpr, inner: f64, outer: f64) -> SymbolExpr {
    let o2 = outer * outer;
    (o2 - t.powi(2)).scale(1.0 / (o2 - inner * inner))
}

/// `sum_k xi_k^{2a/rho_k}` with `a = lcm(rho)`, a polynomial equal to `|xi|^{2a}`.
pub fn norm_poly(frame: &Frame) -> SymbolExpr {
    let a = frame.weights.lcm();
    SymbolExpr::sum(
        frame
            .weights
            .rho()
            .iter()
            .enumerate()
            .map(|(k, &r)| SymbolExpr::var(frame.offset + k).powi((2 * a / r) as i32)),
    )
}

/// `|xi|^p` for the smooth quasi-norm; a polynomial when `p` is a non-negative
/// multiple of `2a`, otherwise a real power defined away from `xi = 0`.
pub fn qnorm_pow(frame: &Frame, p: f64) -> SymbolExpr {
    let two_a = 2.0 * frame.weights.lcm() as f64;
    let e = p / two_a;
    if e >= 0.0 && e.fract() == 0.0 {
        norm_poly(frame).powi(e as i32)
    } else {
        norm_poly(frame).powf(e)
    }
}

/// `0` on `|xi| <= r_in`, `1` on `|xi| >= r_out`.
pub fn annulus_step(frame: &Frame, r_in: f64, r_out: f64) -> SymbolExpr {
    let two_a = 2 * frame.weights.lcm() as i32;
    let lo = r_in.powi(two_a);
    let hi = r_out.powi(two_a);
    step(&(norm_poly(frame) - lo).scale(1.0 / (hi - lo)))
}

/// `0` on `|xi| <= 1/2`, `1` on `|xi| >= 1`.
pub fn phi(frame: &Frame) -> SymbolExpr {
    annulus_step(frame, 0.5, 1.0)
}

/// Profile selector for the cutoffs in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Plateau `|t| <= 1`, support `|t| <= 2`.
    Wide,
    /// Plateau `|t| <= 1/2`, support `|t| <= 1`.
    Narrow,
}

impl Profile {
    fn radii(self) -> (f64, f64) {
        match self {
            Profile::Wide => (1.0, 2.0),
            Profile::Narrow => (0.5, 1.0),
        }
    }
}

/// The cutoffs used by extraction and construction, bound to a layout with `t`.
#[derive(Debug, Clone)]
pub struct CutoffFamily {
    layout: Layout,
}

impl CutoffFamily {
    pub fn new(layout: &Layout) -> Self {
        Self { layout: layout.with_t() }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    fn t(&self) -> SymbolExpr {
        SymbolExpr::var(self.layout.t())
    }

    /// `1` near `t = 0`, compactly supported in `t`.
    pub fn chi0(&self, profile: Profile) -> SymbolExpr {
        let (i, o) = profile.radii();
        plateau(&self.t(), i, o)
    }

    /// `1 - chi0`.
    pub fn chi1(&self, profile: Profile) -> SymbolExpr {
        let (i, o) = profile.radii();
        plateau_complement(&self.t(), i, o)
    }

    /// `0` on `|xi| <= 1/2`, `1` on `|xi| >= 1`.
    pub fn phi(&self) -> SymbolExpr {
        phi(&self.layout.frame())
    }

    /// `1` on `[-1, 1]`, supported in `[-2, 2]`.
    pub fn phi_tilde(&self) -> SymbolExpr {
        plateau(&self.t(), 1.0, 2.0)
    }

    /// `0` on the quasi-ball of radius `radius`, `1` beyond twice that radius.
    pub fn chi_k(&self, radius: f64) -> SymbolExpr {
        annulus_step(&self.layout.frame(), radius, 2.0 * radius)
    }
}
