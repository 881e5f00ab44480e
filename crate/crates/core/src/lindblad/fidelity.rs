use alloc::vec::Vec;
use nalgebra::{DMatrix, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

fn hermitian(m: &Matrix4<C64>) -> Matrix4<C64> {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

fn check_trace(m: &Matrix4<C64>, what: &'static str) -> Result<()> {
    let tr = m.trace();
    if !(tr.re.is_finite() && tr.im.is_finite()) {
        return Err(Error::NotFinite(what));
    }
    if (tr - 1.0).norm() > 1e-6 {
        return Err(Error::invalid(what, "trace differs from 1 by more than 1e-6"));
    }
    Ok(())
}

/// Relative cut below which an eigenvalue of the support state is treated
/// as noise. Integrated states carry eigenvalue noise of order 1e-14, and
/// under the square root that alone would move a 1e-3 infidelity by 1e-8.
const SUPPORT_CUT: f64 = 1e-12;

/// Squared Uhlmann fidelity `(tr √(√ρ₁ ρ₂ √ρ₁))²` of two spin states,
/// clamped to `[0, 1]`.
///
/// The purer state is diagonalised and the product is formed only on its
/// numerically nonzero support, so near-pure inputs do not pick up
/// `√ε`-sized contributions from rounding-level eigenvalues.
pub fn reduced_fidelity(rho1: &Matrix4<C64>, rho2: &Matrix4<C64>) -> Result<f64> {
    check_trace(rho1, "first state")?;
    check_trace(rho2, "second state")?;
    let (a, b) = (hermitian(rho1), hermitian(rho2));
    let purity = |m: &Matrix4<C64>| (m * m).trace().re;
    let (sup, other) = if purity(&a) >= purity(&b) { (a, b) } else { (b, a) };
    let e = SymmetricEigen::new(sup);
    let top = e.eigenvalues.iter().fold(0.0f64, |x, &l| x.max(l));
    let keep: Vec<usize> = (0..4).filter(|&i| e.eigenvalues[i] > SUPPORT_CUT * top).collect();
    let k = keep.len();
    let mut inner = DMatrix::<C64>::zeros(k, k);
    for (r, &i) in keep.iter().enumerate() {
        for (c, &j) in keep.iter().enumerate() {
            let vi = e.eigenvectors.column(i);
            let vj = e.eigenvectors.column(j);
            let w = (vi.adjoint() * other * vj)[(0, 0)];
            inner[(r, c)] = w * (e.eigenvalues[i] * e.eigenvalues[j]).sqrt();
        }
    }
    let root: f64 = if k == 1 {
        inner[(0, 0)].re.max(0.0).sqrt()
    } else {
        let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum()
    };
    Ok((root * root).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩` for a normalised `ψ`.
pub fn pure_state_fidelity(psi: &[C64; 4], rho: &Matrix4<C64>) -> f64 {
    let v = Vector4::from_column_slice(psi);
    (v.adjoint() * rho * v)[(0, 0)].re
}

pub(super) fn min_eigenvalue(m: &Matrix4<C64>) -> Result<f64> {
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NotFinite("spin state"));
    }
    let e = SymmetricEigen::new(hermitian(m));
    Ok(e.eigenvalues.iter().fold(f64::INFINITY, |a, &l| a.min(l)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pure(v: [C64; 4]) -> Matrix4<C64> {
        let v = Vector4::from_column_slice(&v);
        v * v.adjoint()
    }

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identical_states() {
        let s = 0.5f64.sqrt();
        let r = pure([c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, s)]);
        assert!((reduced_fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_states() {
        let z = c(0.0, 0.0);
        let a = pure([c(1.0, 0.0), z, z, z]);
        let b = pure([z, z, c(1.0, 0.0), z]);
        assert!(reduced_fidelity(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn pure_reduces_to_expectation() {
        let psi = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        let a = pure(psi);
        let h = 0.5f64.sqrt();
        let mixed = Matrix4::from_diagonal(&Vector4::new(0.1, 0.2, 0.3, 0.4).map(|x| c(0.5 * x, 0.0)))
            + pure([c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0), c(0.0, h)]) * c(0.5, 0.0);
        let want = pure_state_fidelity(&psi, &mixed);
        let got = reduced_fidelity(&a, &mixed).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn rejects_bad_trace() {
        let r = Matrix4::<C64>::identity();
        assert!(reduced_fidelity(&r, &r).is_err());
    }
}
