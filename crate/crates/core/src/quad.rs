//! Adaptive Gauss–Legendre quadrature for complex-valued integrands.
//!
//! This is the independent oracle the closed-form moment and matrix routines
//! are checked against. It knows nothing about the basis functions beyond
//! being able to call them pointwise.

use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_210_884_826,
    0.433_395_394_129_247_190_799_265_9,
    0.679_409_568_299_024_406_234_327_4,
    0.865_063_366_688_984_510_732_096_7,
    0.973_906_528_517_171_720_077_964,
];
#[allow(clippy::excessive_precision)]
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_870_173_893,
    0.269_266_719_309_996_355_091_226_9,
    0.219_086_362_515_982_043_995_534_9,
    0.149_451_349_150_580_593_145_776_3,
    0.066_671_344_308_688_137_593_568_8,
];

/// Initial uniform split before adaptivity kicks in; keeps a single
/// 10-point panel from agreeing with itself by accident on oscillatory
/// integrands.
const INITIAL_PANELS: usize = 16;
const PANEL_BUDGET: usize = 4_000_000;

/// Ten-point Gauss–Legendre rule on `[a, b]`.
pub(crate) fn gauss_legendre_10<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> C64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = C64::new(0.0, 0.0);
    for (x, w) in GL10_NODES.iter().zip(GL10_WEIGHTS.iter()) {
        acc += (f(mid - half * x) + f(mid + half * x)) * *w;
    }
    acc * half
}

/// Integrate `f` over `[a, b]` to an estimated absolute error of `tol`.
pub fn quad_oracle<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C64> {
    integrate(&mut f, a, b, tol)
}

/// Like [`quad_oracle`], but splits the range at the given interior
/// `breakpoints` first (discontinuities of the integrand). The tolerance is
/// shared in proportion to sub-interval length.
pub fn quad_oracle_split<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: f64,
) -> Result<C64> {
    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    edges.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    edges.push(b);
    edges.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
    let total = b - a;
    let mut acc = C64::new(0.0, 0.0);
    for w in edges.windows(2) {
        if w[1] > w[0] {
            let share = if total > 0.0 { tol * (w[1] - w[0]) / total } else { tol };
            acc += integrate(&mut f, w[0], w[1], share)?;
        }
    }
    Ok(acc)
}

fn integrate<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64, tol: f64) -> Result<C64> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    if !(a <= b) {
        return Err(Error::invalid("interval", "requires a <= b"));
    }
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let total = b - a;
    let mut stack: Vec<(f64, f64, C64)> = Vec::with_capacity(64);
    let step = total / INITIAL_PANELS as f64;
    for k in 0..INITIAL_PANELS {
        let lo = a + step * k as f64;
        let hi = if k + 1 == INITIAL_PANELS { b } else { a + step * (k + 1) as f64 };
        let est = gauss_legendre_10(f, lo, hi);
        stack.push((lo, hi, est));
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut panels = 0usize;
    while let Some((lo, hi, whole)) = stack.pop() {
        panels += 1;
        if panels > PANEL_BUDGET {
            return Err(Error::Quadrature { tol, panels });
        }
        let mid = 0.5 * (lo + hi);
        let left = gauss_legendre_10(f, lo, mid);
        let right = gauss_legendre_10(f, mid, hi);
        let refined = left + right;
        let allowed = tol * (hi - lo) / total;
        let err = (refined - whole).norm();
        if !err.is_finite() {
            return Err(Error::NotFinite("quadrature integrand"));
        }
        if err <= allowed || (hi - lo) <= total * 1e-15 {
            acc += refined;
        } else {
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    Ok(acc)
}
