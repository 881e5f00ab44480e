//! Pulse synthesis: constraint kernel, positive extraction and the
//! generalized-eigenvalue QCQP, plus the two baseline waveforms.
//!
//! Pipeline for the optimised methods:
//!
//! 1. `P` projects onto the joint kernel of the closure and robustness rows.
//! 2. `PMP = Σ λ_k v_k v_kᵀ` is made PSD by taking `|λ_k|`; the sign pattern
//!    becomes the map `S_q = P·F` applied to ion q, while ion p uses `S_p = P`.
//! 3. `min cᵀH̃c  s.t.  cᵀM̃c = θ` is a generalized eigenproblem.
//!
//! All work after step 1 happens in kernel coordinates (`c = N y` with `N`
//! an orthonormal kernel basis), which keeps the eigenproblems small and
//! well conditioned.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::assembly::{AssembledProblem, HeatingMode};
use crate::error::{Error, Result};
use crate::linalg::{fix_sign, null_space, sym_eigen, sym_norm, symmetrize};
use crate::Warning;

/// Relative threshold for both the null-space rank cut and the `M̃` range
/// cut.
pub const EIG_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    HeatingOptimal,
    MinRabi,
    Conventional,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::HeatingOptimal, Method::MinRabi, Method::Conventional];

    pub fn name(self) -> &'static str {
        match self {
            Method::HeatingOptimal => "heating_optimal",
            Method::MinRabi => "min_rabi",
            Method::Conventional => "conventional",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Orthonormal kernel basis and its projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    /// `L × k`, orthonormal columns.
    pub basis: DMatrix<f64>,
    /// `N Nᵀ`.
    pub projector: DMatrix<f64>,
    /// Rank of the stacked constraint rows.
    pub constraint_rank: usize,
}

impl Kernel {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Kernel of arbitrary real constraint rows. Rows are normalised first so
/// closure (`~τ`) and robustness (`~τ²`) rows are weighted alike in the rank
/// decision; this does not change the null space.
pub fn kernel_from_rows(rows: &DMatrix<f64>) -> Result<Kernel> {
    let len = rows.ncols();
    let mut scaled = rows.clone();
    for mut r in scaled.row_iter_mut() {
        let n = r.norm();
        if n > 0.0 {
            r /= n;
        }
    }
    let (basis, rank) = null_space(&scaled, EIG_TOL)?;
    if basis.ncols() == 0 {
        return Err(Error::OverConstrained { rank, len });
    }
    let projector = symmetrize(&(&basis * basis.transpose()));
    Ok(Kernel {
        basis,
        projector,
        constraint_rank: rank,
    })
}

/// Kernel of `Re A, Im A, Re A^diff, Im A^diff` stacked.
pub fn kernel_projector(a: &DMatrix<C64>, a_diff: &DMatrix<C64>) -> Result<Kernel> {
    if a.ncols() != a_diff.ncols() {
        return Err(Error::LengthMismatch {
            field: "a_diff columns",
            expected: a.ncols(),
            found: a_diff.ncols(),
        });
    }
    let n = a.nrows();
    let nd = a_diff.nrows();
    let mut rows = DMatrix::zeros(2 * n + 2 * nd, a.ncols());
    for i in 0..n {
        for l in 0..a.ncols() {
            rows[(2 * i, l)] = a[(i, l)].re;
            rows[(2 * i + 1, l)] = a[(i, l)].im;
        }
    }
    for i in 0..nd {
        for l in 0..a.ncols() {
            rows[(2 * n + 2 * i, l)] = a_diff[(i, l)].re;
            rows[(2 * n + 2 * i + 1, l)] = a_diff[(i, l)].im;
        }
    }
    kernel_from_rows(&rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionResult {
    pub p: DMatrix<f64>,
    pub m_tilde: DMatrix<f64>,
    pub s_p: DMatrix<f64>,
    pub s_q: DMatrix<f64>,
    /// `F = Σ s_k v_k v_kᵀ` over all eigenpairs of `PMP`.
    pub f: DMatrix<f64>,
    /// Signs of the eigenvalues of `PMP` restricted to the kernel, ascending
    /// eigenvalue order.
    pub flip_signature: Vec<i8>,
    pub eig_tol: f64,
    /// Kernel-coordinate versions used by the solver.
    reduced_m_tilde: DMatrix<f64>,
    reduced_f: DMatrix<f64>,
}

/// Positive extraction of `M` over the kernel.
pub fn positive_extract(kernel: &Kernel, m: &DMatrix<f64>) -> Result<ExtractionResult> {
    let nb = &kernel.basis;
    let len = nb.nrows();
    if m.nrows() != len || m.ncols() != len {
        return Err(Error::LengthMismatch {
            field: "M",
            expected: len,
            found: m.nrows(),
        });
    }
    let m_red = symmetrize(&(nb.transpose() * symmetrize(m) * nb));
    let (vals, vecs) = sym_eigen(&m_red)?;
    let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let k = vals.len();
    let mut signs = Vec::with_capacity(k);
    let mut abs_diag = DVector::zeros(k);
    let mut sign_diag = DVector::zeros(k);
    for (i, &v) in vals.iter().enumerate() {
        let s: i8 = if v.abs() <= EIG_TOL * scale || v >= 0.0 { 1 } else { -1 };
        signs.push(s);
        abs_diag[i] = v.abs();
        sign_diag[i] = f64::from(s);
    }
    let reduced_m_tilde = symmetrize(&(&vecs * DMatrix::from_diagonal(&abs_diag) * vecs.transpose()));
    let reduced_f = symmetrize(&(&vecs * DMatrix::from_diagonal(&sign_diag) * vecs.transpose()));
    let p = kernel.projector.clone();
    let m_tilde = symmetrize(&(nb * &reduced_m_tilde * nb.transpose()));
    let pf = nb * &reduced_f * nb.transpose();
    // eigenvectors of PMP outside the kernel carry λ = 0 and sign +1
    let f = symmetrize(&(&pf + (DMatrix::identity(len, len) - &p)));
    Ok(ExtractionResult {
        s_p: p.clone(),
        s_q: pf,
        p,
        m_tilde,
        f,
        flip_signature: signs,
        eig_tol: EIG_TOL,
        reduced_m_tilde,
        reduced_f,
    })
}

/// `min cᵀHc  s.t.  cᵀMc = θ` for PSD `H`, `M`. Returns `(c, λ_min)` with
/// `cᵀHc = λ_min θ`.
///
/// Directions in the null space of `M` carry no angle but may still lower
/// the cost through their coupling to the angle-carrying range; they are
/// eliminated exactly with a Schur complement before whitening, so the
/// returned point is the optimum over the whole space.
pub fn solve_psd_qcqp(h: &DMatrix<f64>, m: &DMatrix<f64>, theta: f64) -> Result<(DVector<f64>, f64)> {
    let n = m.nrows();
    if h.nrows() != n || h.ncols() != n || m.ncols() != n {
        return Err(Error::LengthMismatch {
            field: "H",
            expected: n,
            found: h.nrows(),
        });
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "must be positive and finite"));
    }
    let h = symmetrize(h);
    let (mv, mvec) = sym_eigen(&symmetrize(m))?;
    let top = mv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(top > 0.0) {
        return Err(Error::NoAngleDirection);
    }
    if let Some(&lo) = mv.first() {
        if lo < -EIG_TOL * top * 1e2 {
            return Err(Error::PsdViolation {
                what: "angle matrix eigenvalue",
                value: lo,
            });
        }
    }
    let range: Vec<usize> = (0..n).filter(|&i| mv[i] > EIG_TOL * top).collect();
    let null: Vec<usize> = (0..n).filter(|&i| mv[i] <= EIG_TOL * top).collect();
    if range.is_empty() {
        return Err(Error::NoAngleDirection);
    }
    // whitening map on the range, plain basis on the null part
    let mut w = DMatrix::zeros(n, range.len());
    for (c, &i) in range.iter().enumerate() {
        w.set_column(c, &(mvec.column(i) / mv[i].sqrt()));
    }
    let mut z = DMatrix::zeros(n, null.len());
    for (c, &i) in null.iter().enumerate() {
        z.set_column(c, &mvec.column(i));
    }
    let h_rr = symmetrize(&(w.transpose() * &h * &w));
    let (schur, elim) = if null.is_empty() {
        (h_rr, None)
    } else {
        let h_zz = symmetrize(&(z.transpose() * &h * &z));
        let h_zr = z.transpose() * &h * &w;
        let pinv = psd_pinv(&h_zz)?;
        let elim = &pinv * &h_zr;
        (symmetrize(&(h_rr - h_zr.transpose() * &elim)), Some(elim))
    };
    let (sv, svec) = sym_eigen(&schur)?;
    let lambda = sv[0];
    let hscale = sym_norm(&schur).max(f64::MIN_POSITIVE);
    if lambda < -EIG_TOL * hscale {
        return Err(Error::PsdViolation {
            what: "minimum generalized eigenvalue",
            value: lambda,
        });
    }
    let u: DVector<f64> = svec.column(0).into();
    let mut c = &w * &u;
    if let Some(elim) = elim {
        c -= &z * (elim * &u);
    }
    let mut c = c * theta.sqrt();
    // polish the constraint against rounding
    let got = c.dot(&(symmetrize(m) * &c));
    if got > 0.0 {
        c *= (theta / got).sqrt();
    }
    fix_sign(&mut c);
    Ok((c, lambda.max(0.0)))
}

/// Moore–Penrose inverse of a PSD matrix with the relative cut `EIG_TOL`.
fn psd_pinv(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(a)?;
    let top = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut inv = DVector::zeros(vals.len());
    for (i, &v) in vals.iter().enumerate() {
        if v > EIG_TOL * top {
            inv[i] = 1.0 / v;
        }
    }
    Ok(&vecs * DMatrix::from_diagonal(&inv) * vecs.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    pub method: Method,
    pub mu: f64,
    /// Signed target as requested.
    pub theta_target: f64,
    /// `c_pᵀ M c_q`, signed.
    pub theta_achieved: f64,
    /// Pre-map solution vector in the original coefficient space.
    pub c: Vec<f64>,
    pub c_p: Vec<f64>,
    pub c_q: Vec<f64>,
    /// Rayleigh value `cᵀH̃c / θ` of the returned pulse.
    pub lambda_min: f64,
    /// `c_pᵀH_pp c_p + c_qᵀH_qq c_q`.
    pub predicted_estimate: f64,
    pub rabi_l2: f64,
    pub rabi_max: f64,
    /// Worst scale-free constraint residual over both pulses.
    pub constraint_residual: f64,
    pub flipped: bool,
    pub warnings: Vec<Warning>,
}

/// Objective for the optimised methods in kernel coordinates.
fn reduced_objective(
    kernel: &Kernel,
    ext: &ExtractionResult,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> DMatrix<f64> {
    // S_p N = N, S_q N = N F_r
    let nb = &kernel.basis;
    let qp = nb.transpose() * a * nb;
    let nf = nb * &ext.reduced_f;
    let qq = nf.transpose() * b * nf;
    symmetrize(&(qp + qq))
}

/// Build pulses for `problem.gate` with the given method.
pub fn synthesize(problem: &AssembledProblem, method: Method) -> Result<SynthesisResult> {
    let theta_req = problem.gate.theta_target;
    if !(theta_req.is_finite() && theta_req != 0.0) {
        return Err(Error::invalid("theta_target", "must be finite and nonzero"));
    }
    let theta = theta_req.abs();
    let flipped = theta_req < 0.0;
    let kernel = kernel_from_rows(&problem.stacked_constraints())?;
    let mut warnings = problem.warnings.clone();
    let (c, c_p, mut c_q) = match method {
        Method::HeatingOptimal | Method::MinRabi => {
            let ext = positive_extract(&kernel, &problem.m)?;
            let obj = match method {
                Method::HeatingOptimal => reduced_objective(&kernel, &ext, &problem.h_pp, &problem.h_qq),
                _ => reduced_objective(&kernel, &ext, &problem.g, &problem.g),
            };
            let (y, _) = solve_psd_qcqp(&obj, &ext.reduced_m_tilde, theta)?;
            let nb = &kernel.basis;
            let c = nb * &y;
            let c_p = c.clone();
            let c_q = nb * (&ext.reduced_f * &y);
            (c, c_p, c_q)
        }
        Method::Conventional => {
            let (c0, sign, fallback) = conventional_direction(&kernel, &problem.m, theta)?;
            if fallback {
                warnings.push(Warning::ConventionalFallback);
            }
            let c_q = &c0 * sign;
            (c0.clone(), c0, c_q)
        }
    };
    if flipped {
        c_q = -c_q;
        warnings.push(Warning::TargetFlipped);
    }
    let c_p_v: Vec<f64> = c_p.iter().copied().collect();
    let c_q_v: Vec<f64> = c_q.iter().copied().collect();
    let theta_achieved = problem.rotation_angle(&c_p_v, &c_q_v);
    if !theta_achieved.is_finite() {
        return Err(Error::NotFinite("synthesised angle"));
    }
    let predicted_estimate = problem.heating_error(&c_p_v, &c_q_v, HeatingMode::Diagonal);
    let rabi_l2 = problem.rabi_l2(&c_p_v, &c_q_v);
    let rabi_max = c_p_v.iter().chain(c_q_v.iter()).fold(0.0f64, |a, x| a.max(x.abs()));
    let constraint_residual = problem
        .constraint_residual(&c_p_v)
        .max(problem.constraint_residual(&c_q_v));
    Ok(SynthesisResult {
        method,
        mu: problem.spec.mu,
        theta_target: theta_req,
        theta_achieved,
        c: c.iter().copied().collect(),
        c_p: c_p_v,
        c_q: c_q_v,
        lambda_min: predicted_estimate / theta,
        predicted_estimate,
        rabi_l2,
        rabi_max,
        constraint_residual,
        flipped,
        warnings,
    })
}

/// Uniform drive projected onto the kernel and scaled to `θ`. Returns the
/// vector, the sign for ion q and whether the fallback direction was used.
fn conventional_direction(kernel: &Kernel, m: &DMatrix<f64>, theta: f64) -> Result<(DVector<f64>, f64, bool)> {
    let len = m.nrows();
    let m = symmetrize(m);
    let uniform = DVector::from_element(len, 1.0 / (len as f64).sqrt());
    let mut c0 = &kernel.projector * uniform;
    let mut val = c0.dot(&(&m * &c0));
    let mnorm = sym_norm(&m);
    let mut fallback = false;
    if !(val.abs() > EIG_TOL * mnorm) {
        let nb = &kernel.basis;
        let (vals, vecs) = sym_eigen(&symmetrize(&(nb.transpose() * &m * nb)))?;
        let (idx, _) = vals
            .iter()
            .enumerate()
            .fold((0, -1.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best });
        c0 = nb * vecs.column(idx);
        val = c0.dot(&(&m * &c0));
        fallback = true;
        if !(val.abs() > EIG_TOL * mnorm) {
            return Err(Error::NoAngleDirection);
        }
    }
    c0 *= (theta / val.abs()).sqrt();
    Ok((c0, if val >= 0.0 { 1.0 } else { -1.0 }, fallback))
}

/// One side of the single-mode Fourier comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSolution {
    pub coeffs: Vec<f64>,
    pub heating: f64,
    /// Single-tone heating divided by this heating.
    pub improvement: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierComparison {
    pub len: usize,
    pub theta: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Heating of the one-tone pulse, the common reference.
    pub single_tone_heating: f64,
    pub ours: FourierSolution,
    /// `None` for `L = 1`, where the zero-displacement-sum constraint leaves
    /// only `c = 0`.
    pub prior: Option<FourierSolution>,
}

/// `E = Γ (2π/Δ) (Σ c_l²/l² + (Σ c_l/l)²)`.
pub fn fourier_heating(coeffs: &[f64], gamma: f64, delta: f64) -> f64 {
    let (sq, lin) = coeffs.iter().enumerate().fold((0.0, 0.0), |(s, l), (i, c)| {
        let k = (i + 1) as f64;
        (s + c * c / (k * k), l + c / k)
    });
    gamma * (2.0 * core::f64::consts::PI / delta) * (sq + lin * lin)
}

/// Angle `4π Σ c_l²/l` of a common-drive Fourier pulse over one period.
pub fn fourier_angle(coeffs: &[f64]) -> f64 {
    4.0 * core::f64::consts::PI
        * coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * c / (i + 1) as f64)
            .sum::<f64>()
}

/// Heating-optimal tone weights for a single mode with common drive over
/// one period of the fundamental, against the variant that pins the
/// displacement sum `Σ c_l/l` to zero instead of penalising it.
pub fn single_mode_fourier_compare(len: usize, theta: f64, gamma: f64, delta_fund: f64) -> Result<FourierComparison> {
    if len == 0 {
        return Err(Error::invalid("len", "need at least one tone"));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::invalid("theta", "must be positive and finite"));
    }
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", "must be non-negative"));
    }
    if !(delta_fund > 0.0 && delta_fund.is_finite()) {
        return Err(Error::invalid("delta_fund", "must be positive"));
    }
    let four_pi = 4.0 * core::f64::consts::PI;
    let mut d = DMatrix::zeros(len, len);
    let mut m = DMatrix::zeros(len, len);
    let u = DVector::from_iterator(len, (1..=len).map(|l| 1.0 / l as f64));
    for l in 0..len {
        let k = (l + 1) as f64;
        d[(l, l)] = 1.0 / (k * k);
        m[(l, l)] = four_pi / k;
    }
    let ours_obj = &d + &u * u.transpose();
    let (c_ours, _) = solve_psd_qcqp(&ours_obj, &m, theta)?;
    let single = {
        let c1 = (theta / four_pi).sqrt();
        fourier_heating(&[c1], gamma, delta_fund)
    };
    let pack = |c: &DVector<f64>| {
        let coeffs: Vec<f64> = c.iter().copied().collect();
        let heating = fourier_heating(&coeffs, gamma, delta_fund);
        FourierSolution {
            improvement: if heating > 0.0 { single / heating } else { f64::INFINITY },
            coeffs,
            heating,
        }
    };
    let ours = pack(&c_ours);
    let prior = if len == 1 {
        None
    } else {
        let row = DMatrix::from_row_slice(1, len, u.as_slice());
        let kernel = kernel_from_rows(&row)?;
        let nb = &kernel.basis;
        let obj = symmetrize(&(nb.transpose() * &d * nb));
        let ang = symmetrize(&(nb.transpose() * &m * nb));
        let (y, _) = solve_psd_qcqp(&obj, &ang, theta)?;
        let mut c = nb * y;
        fix_sign(&mut c);
        Some(pack(&c))
    };
    Ok(FourierComparison {
        len,
        theta,
        gamma,
        delta: delta_fund,
        single_tone_heating: single,
        ours,
        prior,
    })
}

/// Expand kernel-coordinate vectors; exposed for property tests.
pub fn expand(kernel: &Kernel, y: &[f64]) -> Vec<f64> {
    let v = &kernel.basis * DVector::from_column_slice(y);
    v.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    #[test]
    fn projector_for_single_row() {
        let rows = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let k = kernel_from_rows(&rows).unwrap();
        let expect = DMatrix::from_row_slice(3, 3, &[0.5, -0.5, 0.0, -0.5, 0.5, 0.0, 0.0, 0.0, 1.0]);
        assert!((&k.projector - expect).abs().max() < 1e-14);
        assert_eq!(k.dim(), 2);
    }

    #[test]
    fn full_rank_rows_are_over_constrained() {
        let rows = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(kernel_from_rows(&rows), Err(Error::OverConstrained { rank: 3, len: 3 })));
    }

    #[test]
    fn extraction_of_indefinite_diagonal() {
        let k = kernel_from_rows(&DMatrix::zeros(1, 2)).unwrap();
        let ext = positive_extract(&k, &diag(&[1.0, -1.0])).unwrap();
        assert!((&ext.m_tilde - DMatrix::identity(2, 2)).abs().max() < 1e-14);
        assert!((&ext.f - diag(&[1.0, -1.0])).abs().max() < 1e-14);
        let c = DVector::from_column_slice(&[1.0, 1.0]);
        let cq = &ext.s_q * &c;
        assert!((cq - DVector::from_column_slice(&[1.0, -1.0])).norm() < 1e-14);
    }

    #[test]
    fn qcqp_diagonal_pencil() {
        let (c, lam) = solve_psd_qcqp(&diag(&[2.0, 12.0]), &diag(&[1.0, 4.0]), 1.0).unwrap();
        assert!((lam - 2.0).abs() < 1e-14);
        assert!((c[0] - 1.0).abs() < 1e-14 && c[1].abs() < 1e-14);
    }

    #[test]
    fn qcqp_isotropic() {
        let (c, lam) = solve_psd_qcqp(&DMatrix::identity(3, 3), &DMatrix::identity(3, 3), 4.0).unwrap();
        assert!((c.norm() - 2.0).abs() < 1e-14);
        assert!((lam - 1.0).abs() < 1e-14);
    }

    #[test]
    fn qcqp_uses_angle_free_directions() {
        // the second coordinate has no angle but lowers cost through coupling
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        let m = diag(&[1.0, 0.0]);
        let (c, lam) = solve_psd_qcqp(&h, &m, 1.0).unwrap();
        assert!((lam - 1.0).abs() < 1e-14);
        assert!((c.dot(&(&h * &c)) - 1.0).abs() < 1e-14);
        assert!((c[1] + c[0]).abs() < 1e-14);
    }

    #[test]
    fn qcqp_rejects_zero_angle() {
        assert_eq!(
            solve_psd_qcqp(&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2), 1.0),
            Err(Error::NoAngleDirection)
        );
    }

    #[test]
    fn fourier_single_tone() {
        let r = single_mode_fourier_compare(1, 1.0, 500.0, 1e5).unwrap();
        let c1 = (1.0 / (4.0 * core::f64::consts::PI)).sqrt();
        assert!((r.ours.coeffs[0] - c1).abs() < 1e-14);
        assert!(r.prior.is_none());
        assert!((r.ours.improvement - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourier_two_tones() {
        let r = single_mode_fourier_compare(2, core::f64::consts::FRAC_PI_4, 500.0, 1e5).unwrap();
        let prior = r.prior.unwrap();
        assert!((prior.improvement - 3.0).abs() < 1e-10, "{}", prior.improvement);
        assert!(r.ours.heating <= prior.heating);
        assert!((fourier_angle(&r.ours.coeffs) - core::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }
}
