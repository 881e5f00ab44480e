//! Pulse-expansion bases and the oscillatory moments every matrix is built
//! from.
//!
//! Two bases are provided. The piecewise-constant one splits `[0, τ]` into
//! `L` equal segments; the Fourier one uses `f_l(t) = Δ·e^{i l Δ t}`,
//! `l = 1..=L`. All moments are evaluated in closed form through the
//! segment kernels below, which switch to short series where the direct
//! expressions would cancel.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// `|x|` below which `(e^{ix}-1)/(ix)` is replaced by `1 + ix/2`.
pub const SERIES_SWITCH: f64 = 1e-8;

/// `(e^{ix} - 1)/(ix)`; the numerator is written as `-2 sin²(x/2) + i sin x`
/// so nothing cancels away from zero.
pub(crate) fn phi1(x: f64) -> C64 {
    if x.abs() <= SERIES_SWITCH {
        return C64::new(1.0, 0.5 * x);
    }
    let s = (0.5 * x).sin();
    C64::new(x.sin() / x, 2.0 * s * s / x)
}

/// `∫₀¹ u e^{ixu} du`.
pub(crate) fn psi(x: f64) -> C64 {
    if x.abs() < 0.5 {
        // Σ (ix)^n / (n! (n+2))
        let ix = C64::new(0.0, x);
        let mut term = C64::new(1.0, 0.0);
        let mut acc = C64::new(0.5, 0.0);
        for n in 1..30 {
            term = term * ix / n as f64;
            let add = term / (n + 2) as f64;
            acc += add;
            if add.norm() < 1e-18 {
                break;
            }
        }
        return acc;
    }
    let e = C64::new(0.0, x).exp();
    e / C64::new(0.0, x) + (e - 1.0) / (x * x)
}

/// `(x - sin x)/x³`, the kernel of the triangle integrals.
pub(crate) fn tri(x: f64) -> f64 {
    if x.abs() < 0.1 {
        // 1/3! - x²/5! + x⁴/7! - ...
        let x2 = x * x;
        let mut term = 1.0 / 6.0;
        let mut acc = term;
        let mut k = 3.0;
        for _ in 0..12 {
            term *= -x2 / ((k + 1.0) * (k + 2.0));
            acc += term;
            k += 2.0;
        }
        return acc;
    }
    (x - x.sin()) / (x * x * x)
}

/// `∫_a^b e^{iwt} dt`.
pub(crate) fn seg_m0(a: f64, b: f64, w: f64) -> C64 {
    let h = b - a;
    C64::new(0.0, w * a).exp() * phi1(w * h) * h
}

/// `∫_a^b t e^{iwt} dt`.
pub(crate) fn seg_m1(a: f64, b: f64, w: f64) -> C64 {
    let h = b - a;
    let x = w * h;
    C64::new(0.0, w * a).exp() * (phi1(x) * (a * h) + psi(x) * (h * h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BasisKind {
    PiecewiseConstant,
    /// `f_l(t) = fundamental · e^{i l fundamental t}` for `l = 1..=L`.
    Fourier { fundamental: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    kind: BasisKind,
    len: usize,
    tau: f64,
}

impl Basis {
    pub fn piecewise(len: usize, tau: f64) -> Result<Self> {
        check_common(len, tau)?;
        Ok(Basis {
            kind: BasisKind::PiecewiseConstant,
            len,
            tau,
        })
    }

    pub fn fourier(len: usize, fundamental: f64, tau: f64) -> Result<Self> {
        check_common(len, tau)?;
        if !(fundamental.is_finite() && fundamental > 0.0) {
            return Err(Error::invalid("fundamental", "must be finite and positive"));
        }
        Ok(Basis {
            kind: BasisKind::Fourier { fundamental },
            len,
            tau,
        })
    }

    /// Default segment count for an `n`-ion chain.
    pub fn default_segments(num_ions: usize) -> usize {
        6 * num_ions + 20
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn is_piecewise(&self) -> bool {
        matches!(self.kind, BasisKind::PiecewiseConstant)
    }

    /// Endpoints of segment `l` (0-based). Only meaningful for the piecewise
    /// basis; the Fourier basis reports the whole interval.
    pub fn segment(&self, l: usize) -> (f64, f64) {
        match self.kind {
            BasisKind::PiecewiseConstant => {
                let n = self.len as f64;
                let a = self.tau * l as f64 / n;
                let b = if l + 1 == self.len {
                    self.tau
                } else {
                    self.tau * (l + 1) as f64 / n
                };
                (a, b)
            }
            BasisKind::Fourier { .. } => (0.0, self.tau),
        }
    }

    /// Segment edges `t_0 = 0, …, t_L = τ`.
    pub fn edges(&self) -> Vec<f64> {
        let mut out: Vec<f64> = (0..self.len).map(|l| self.segment(l).0).collect();
        out.push(self.tau);
        out
    }

    /// Index of the segment containing `t`; `t = τ` belongs to the last one.
    pub fn segment_index(&self, t: f64) -> usize {
        let raw = (t / self.tau * self.len as f64).floor();
        let mut idx = if raw < 0.0 { 0 } else { raw as usize };
        if idx >= self.len {
            idx = self.len - 1;
        }
        // floor can land one off near an edge; settle on the half-open rule
        let (a, b) = self.segment(idx);
        if t < a && idx > 0 {
            idx -= 1;
        } else if t >= b && idx + 1 < self.len {
            idx += 1;
        }
        idx
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.tau) {
            return Err(Error::OutOfRange { t, tau: self.tau });
        }
        Ok(())
    }

    /// Values `f_l(t)`.
    pub fn eval(&self, t: f64) -> Result<Vec<C64>> {
        self.check_time(t)?;
        Ok(match self.kind {
            BasisKind::PiecewiseConstant => {
                let mut v = vec![C64::new(0.0, 0.0); self.len];
                v[self.segment_index(t)] = C64::new(1.0, 0.0);
                v
            }
            BasisKind::Fourier { fundamental } => (1..=self.len)
                .map(|l| C64::new(0.0, l as f64 * fundamental * t).exp() * fundamental)
                .collect(),
        })
    }

    /// `∫₀^τ f_l(t) e^{iΔt} dt` for each `l`.
    pub fn moment0(&self, delta: f64) -> Vec<C64> {
        match self.kind {
            BasisKind::PiecewiseConstant => (0..self.len)
                .map(|l| {
                    let (a, b) = self.segment(l);
                    seg_m0(a, b, delta)
                })
                .collect(),
            BasisKind::Fourier { fundamental } => (1..=self.len)
                .map(|l| seg_m0(0.0, self.tau, delta + l as f64 * fundamental) * fundamental)
                .collect(),
        }
    }

    /// `∫₀^τ t f_l(t) e^{iΔt} dt` for each `l`.
    pub fn moment1(&self, delta: f64) -> Vec<C64> {
        match self.kind {
            BasisKind::PiecewiseConstant => (0..self.len)
                .map(|l| {
                    let (a, b) = self.segment(l);
                    seg_m1(a, b, delta)
                })
                .collect(),
            BasisKind::Fourier { fundamental } => (1..=self.len)
                .map(|l| seg_m1(0.0, self.tau, delta + l as f64 * fundamental) * fundamental)
                .collect(),
        }
    }

    /// `∫₀^t f_l(s) e^{iΔs} ds` for each `l`.
    pub fn partial_moment(&self, delta: f64, t: f64) -> Result<Vec<C64>> {
        self.check_time(t)?;
        Ok(match self.kind {
            BasisKind::PiecewiseConstant => {
                let cur = self.segment_index(t);
                (0..self.len)
                    .map(|l| {
                        let (a, b) = self.segment(l);
                        if l < cur {
                            seg_m0(a, b, delta)
                        } else if l == cur {
                            seg_m0(a, t, delta)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            }
            BasisKind::Fourier { fundamental } => (1..=self.len)
                .map(|l| seg_m0(0.0, t, delta + l as f64 * fundamental) * fundamental)
                .collect(),
        })
    }

    /// Gram matrix `∫ f_k f_l dt` of the real piecewise basis (diagonal).
    pub fn gram_diagonal(&self) -> Result<Vec<f64>> {
        if !self.is_piecewise() {
            return Err(Error::Unsupported("Gram matrix of the complex Fourier basis"));
        }
        Ok((0..self.len)
            .map(|l| {
                let (a, b) = self.segment(l);
                b - a
            })
            .collect())
    }
}

fn check_common(len: usize, tau: f64) -> Result<()> {
    if len == 0 {
        return Err(Error::invalid("L", "basis needs at least one function"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", "must be finite and positive"));
    }
    Ok(())
}

/// Real amplitude `Ω(t) = c·f(t)` on a piecewise basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    basis: Basis,
    coeffs: Vec<f64>,
}

impl Waveform {
    pub fn new(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::LengthMismatch {
                field: "coeffs",
                expected: basis.len(),
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NotFinite("waveform coefficients"));
        }
        Ok(Waveform { basis, coeffs })
    }

    pub fn zero(basis: Basis) -> Self {
        let n = basis.len();
        Waveform {
            basis,
            coeffs: vec![0.0; n],
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `Ω(t)`; for the Fourier basis this is the real part of the complex
    /// envelope.
    pub fn value(&self, t: f64) -> Result<f64> {
        match self.basis.kind {
            BasisKind::PiecewiseConstant => {
                self.basis.check_time(t)?;
                Ok(self.coeffs[self.basis.segment_index(t)])
            }
            BasisKind::Fourier { .. } => {
                let f = self.basis.eval(t)?;
                Ok(f.iter().zip(&self.coeffs).map(|(f, c)| f.re * c).sum())
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::quad_oracle;
    use core::f64::consts::PI;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eval_partition_membership() {
        let b = Basis::piecewise(4, 1.0).unwrap();
        let v = b.eval(0.3).unwrap();
        let re: Vec<f64> = v.iter().map(|c| c.re).collect();
        assert_eq!(re, vec![0.0, 1.0, 0.0, 0.0]);
        let last = b.eval(1.0).unwrap();
        assert_eq!(last[3], C64::new(1.0, 0.0));
        assert_eq!(last.iter().filter(|c| c.norm() > 0.0).count(), 1);
        assert!(b.eval(1.0 + 1e-12).is_err());
        assert!(b.eval(-1e-12).is_err());
    }

    #[test]
    fn eval_fourier_at_zero() {
        let b = Basis::fourier(2, 1.0, 2.0 * PI).unwrap();
        let v = b.eval(0.0).unwrap();
        assert_eq!(v, vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn segment_edges_are_exact_at_ends() {
        let b = Basis::piecewise(38, 150e-6).unwrap();
        assert_eq!(b.segment(0).0, 0.0);
        assert_eq!(b.segment(37).1, 150e-6);
        for l in 0..38 {
            let (a, e) = b.segment(l);
            assert_eq!(b.segment_index(a), l);
            assert_eq!(b.segment_index(0.5 * (a + e)), l);
        }
    }

    #[test]
    fn moment0_at_zero_detuning_is_segment_length() {
        let b = Basis::piecewise(4, 1.0).unwrap();
        for v in b.moment0(0.0) {
            assert!(close(v, C64::new(0.25, 0.0), 1e-16));
        }
    }

    #[test]
    fn moment0_full_period_vanishes() {
        let b = Basis::piecewise(1, 1.0).unwrap();
        assert!(b.moment0(2.0 * PI)[0].norm() < 1e-15);
        let b = Basis::piecewise(1, 1e-4).unwrap();
        let d = 2.0 * PI * 1e4;
        let m = b.moment0(d)[0];
        assert!(m.norm() < 1e-15);
        let q = quad_oracle(|t| C64::new(0.0, d * t).exp(), 0.0, 1e-4, 1e-16).unwrap();
        assert!(close(m, q, 1e-15));
    }

    #[test]
    fn moment1_examples() {
        let b = Basis::piecewise(1, 1.0).unwrap();
        assert!(close(b.moment1(0.0)[0], C64::new(0.5, 0.0), 1e-16));
        let d = 2.0 * PI;
        let expected = C64::new(1.0, 0.0) / C64::new(0.0, d);
        let got = b.moment1(d)[0];
        assert!(close(got, expected, 1e-14), "{got} vs {expected}");
        let q = quad_oracle(|t| C64::new(0.0, d * t).exp() * t, 0.0, 1.0, 1e-14).unwrap();
        assert!(close(got, q, 1e-12));
    }

    #[test]
    fn partial_moment_edges() {
        let b = Basis::piecewise(2, 2.0).unwrap();
        let z = b.partial_moment(0.7, 0.0).unwrap();
        assert!(z.iter().all(|c| c.norm() == 0.0));
        let full = b.partial_moment(0.7, 2.0).unwrap();
        let m0 = b.moment0(0.7);
        for (a, c) in full.iter().zip(&m0) {
            assert!(close(*a, *c, 1e-15));
        }
        let half = b.partial_moment(0.0, 1.0).unwrap();
        assert!(close(half[0], C64::new(1.0, 0.0), 1e-15));
        assert!(half[1].norm() < 1e-15);
        assert!(b.partial_moment(0.7, 2.5).is_err());
    }

    #[test]
    fn series_branch_agrees_at_switch() {
        for &x in &[SERIES_SWITCH * 0.999, SERIES_SWITCH * 1.001, -SERIES_SWITCH * 1.001] {
            let series = C64::new(1.0, 0.5 * x);
            let direct = (C64::new(0.0, x).exp() - 1.0) / C64::new(0.0, x);
            assert!((phi1(x) - series).norm() < 1e-12);
            assert!((phi1(x) - direct).norm() < 1e-8);
        }
        // psi and tri across their own switch points
        for &x in &[0.499_999f64, 0.500_001] {
            let q = quad_oracle(|u| C64::new(0.0, x * u).exp() * u, 0.0, 1.0, 1e-15).unwrap();
            assert!((psi(x) - q).norm() < 1e-14);
        }
        for &x in &[0.099_999f64, 0.100_001] {
            let exact = (x - x.sin()) / (x * x * x);
            assert!((tri(x) - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn fourier_moments_match_quadrature() {
        let fund = 2.0 * PI * 5e4;
        let tau = 2.0 * PI / fund;
        let b = Basis::fourier(3, fund, tau).unwrap();
        let d = 12_345.0;
        let m0 = b.moment0(d);
        let m1 = b.moment1(d);
        for l in 0..3 {
            let w = d + (l + 1) as f64 * fund;
            let q0 = quad_oracle(|t| C64::new(0.0, w * t).exp() * fund, 0.0, tau, 1e-14).unwrap();
            let q1 =
                quad_oracle(|t| C64::new(0.0, w * t).exp() * fund * t, 0.0, tau, 1e-17).unwrap();
            assert!((m0[l] - q0).norm() <= 1e-10 * q0.norm().max(1e-3));
            assert!((m1[l] - q1).norm() <= 1e-10 * q1.norm().max(1e-9));
        }
    }

    #[test]
    fn waveform_length_checked() {
        let b = Basis::piecewise(3, 1.0).unwrap();
        assert!(Waveform::new(b.clone(), vec![1.0, 2.0]).is_err());
        let w = Waveform::new(b, vec![1.0, -2.0, 3.0]).unwrap();
        assert_eq!(w.value(0.5).unwrap(), -2.0);
        assert_eq!(w.max_abs(), 3.0);
    }
}
