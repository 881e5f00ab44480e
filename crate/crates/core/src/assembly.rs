//! Matrix form of the gate: constraint rows, rotation-angle matrix, heating
//! cost matrices and phase-space trajectories for a (modes, basis, gate)
//! triple.
//!
//! With `Ω_j(t) = c_j·f(t)` every gate quantity is linear or bilinear in the
//! coefficient vectors:
//!
//! ```text
//! α_j^m(τ) ∝ A_m · c_j            (loop closure)
//! ∂α_j^m/∂μ ∝ A^diff_m · c_j      (detuning robustness)
//! Θ(τ) = c_pᵀ M c_q
//! E_{j1,j2} = c_{j1}ᵀ C^{(j1,j2)} c_{j2}
//! ```
//!
//! For the piecewise basis every entry has a closed form built from the
//! per-segment kernels in [`crate::basis`].

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::basis::{self, Basis, Waveform};
use crate::error::{Error, Result};
use crate::modes::ModeSpec;
use crate::Warning;

/// Participation below which an ion is treated as not coupling to a mode.
const PARTICIPATION_FLOOR: f64 = 1e-12;

/// The two driven ions (0-based) and the target angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSpec {
    pub p: usize,
    pub q: usize,
    /// Θ_targ, rad. A negative value is synthesised as `|Θ|` with ion q's
    /// pulse sign-flipped.
    pub theta_target: f64,
}

impl GateSpec {
    pub fn new(p: usize, q: usize, theta_target: f64) -> Result<Self> {
        let g = GateSpec { p, q, theta_target };
        if p == q {
            return Err(Error::invalid("gate", "p and q must be distinct ions"));
        }
        if !(theta_target.is_finite() && theta_target != 0.0) {
            return Err(Error::invalid("theta_target", "must be finite and nonzero"));
        }
        Ok(g)
    }

    pub fn check_against(&self, num_ions: usize) -> Result<()> {
        if self.p >= num_ions || self.q >= num_ions {
            return Err(Error::invalid("gate", "ion index outside the chain"));
        }
        if self.p == self.q {
            return Err(Error::invalid("gate", "p and q must be distinct ions"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatingMode {
    /// `Σ |E_{j1,j2}|` over all four ion pairs.
    Full,
    /// `E_pp + E_qq`.
    Diagonal,
}

/// The four heating-error terms for a pulse pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingTerms {
    pub pp: f64,
    pub qq: f64,
    pub pq: C64,
    pub qp: C64,
}

impl HeatingTerms {
    pub fn full(&self) -> f64 {
        self.pp.abs() + self.qq.abs() + self.pq.norm() + self.qp.norm()
    }

    pub fn diagonal(&self) -> f64 {
        self.pp + self.qq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledProblem {
    pub spec: ModeSpec,
    pub basis: Basis,
    pub gate: GateSpec,
    /// `A_ml`, one row per mode (N × L).
    pub a: DMatrix<C64>,
    /// `A^diff_ml` (N × L).
    pub a_diff: DMatrix<C64>,
    /// Rows of `a`/`a_diff` that enter the kernel; modes neither driven ion
    /// couples to are left out.
    pub constraint_modes: Vec<usize>,
    pub m: DMatrix<f64>,
    pub h_pp: DMatrix<f64>,
    pub h_qq: DMatrix<f64>,
    pub h_pq: DMatrix<f64>,
    /// Complex heating forms; `c_qp = c_pq` entrywise for real coefficients.
    pub c_pp: DMatrix<C64>,
    pub c_qq: DMatrix<C64>,
    pub c_pq: DMatrix<C64>,
    /// `G_kl = ∫ f_k f_l dt`.
    pub g: DMatrix<f64>,
    pub warnings: Vec<Warning>,
}

/// `A` and `A^diff` for every mode.
pub fn assemble_constraints(spec: &ModeSpec, basis: &Basis) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if spec.tau != basis.tau() {
        return Err(Error::invalid("tau", "mode spec and basis disagree on the gate duration"));
    }
    let n = spec.num_modes();
    let l = basis.len();
    let mut a = DMatrix::zeros(n, l);
    let mut a_diff = DMatrix::zeros(n, l);
    for m in 0..n {
        let delta = spec.detuning(m);
        for (k, v) in basis.moment0(delta).into_iter().enumerate() {
            a[(m, k)] = v;
        }
        for (k, v) in basis.moment1(delta).into_iter().enumerate() {
            a_diff[(m, k)] = v;
        }
    }
    Ok((a, a_diff))
}

/// Per-segment building blocks for one detuning.
struct SegmentMoments {
    /// `∫_{seg l} e^{iΔt} dt`
    m0: Vec<C64>,
    /// `∫_{a_l}^τ ∫_0^t f_l(s) e^{iΔs} ds dt`
    tail: Vec<C64>,
    /// `∫_{seg l} |∫_{a_l}^t e^{iΔs} ds|² dt`
    self_sq: Vec<f64>,
    /// `∬_{a_l<t2<t1<b_l} sin Δ(t1−t2)`
    tri_sin: Vec<f64>,
}

fn segment_moments(basis: &Basis, delta: f64) -> SegmentMoments {
    let len = basis.len();
    let tau = basis.tau();
    let mut out = SegmentMoments {
        m0: Vec::with_capacity(len),
        tail: Vec::with_capacity(len),
        self_sq: Vec::with_capacity(len),
        tri_sin: Vec::with_capacity(len),
    };
    for l in 0..len {
        let (a, b) = basis.segment(l);
        let h = b - a;
        let x = delta * h;
        let m0 = basis::seg_m0(a, b, delta);
        let phase = C64::new(0.0, delta * a).exp();
        // ∫_a^b ∫_a^t e^{iΔs} ds dt = e^{iΔa} h² ∫₀¹ (1−v) e^{ixv} dv
        let inner = phase * (basis::phi1(x) - basis::psi(x)) * (h * h);
        let t3 = basis::tri(x);
        out.m0.push(m0);
        out.tail.push(inner + m0 * (tau - b));
        out.self_sq.push(2.0 * h * h * h * t3);
        out.tri_sin.push(delta * h * h * h * t3);
    }
    out
}

/// `K_kl = ∫₀^τ conj(P_k(t)) P_l(t) dt` for one detuning (Hermitian).
fn trajectory_overlap(basis: &Basis, seg: &SegmentMoments) -> DMatrix<C64> {
    let len = basis.len();
    let tau = basis.tau();
    let mut k = DMatrix::zeros(len, len);
    for i in 0..len {
        let (_, b) = basis.segment(i);
        k[(i, i)] = C64::new(seg.self_sq[i] + (tau - b) * seg.m0[i].norm_sqr(), 0.0);
        for j in (i + 1)..len {
            let v = seg.m0[i].conj() * seg.tail[j];
            k[(i, j)] = v;
            k[(j, i)] = v.conj();
        }
    }
    k
}

/// `J_kl = ∬_{t2<t1} f_k(t1) f_l(t2) sin Δ(t1−t2)`, symmetrised as
/// `J_kl + J_lk`.
fn angle_kernel(basis: &Basis, seg: &SegmentMoments) -> DMatrix<f64> {
    let len = basis.len();
    let mut j = DMatrix::zeros(len, len);
    for a in 0..len {
        j[(a, a)] = 2.0 * seg.tri_sin[a];
        for b in 0..a {
            // segment a strictly after segment b
            let v = (seg.m0[a] * seg.m0[b].conj()).im;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    j
}

fn check_piecewise(basis: &Basis) -> Result<()> {
    if !basis.is_piecewise() {
        return Err(Error::Unsupported(
            "angle and heating matrices need the real piecewise-constant basis",
        ));
    }
    Ok(())
}

/// Rotation-angle matrix `M` (real symmetric).
pub fn assemble_m(spec: &ModeSpec, basis: &Basis, gate: &GateSpec) -> Result<DMatrix<f64>> {
    check_piecewise(basis)?;
    gate.check_against(spec.num_ions)?;
    let len = basis.len();
    let mut m = DMatrix::zeros(len, len);
    for (idx, mode) in spec.modes.iter().enumerate() {
        let w = 0.25 * mode.eta * mode.eta * mode.vector[gate.p] * mode.vector[gate.q];
        if w == 0.0 {
            continue;
        }
        let seg = segment_moments(basis, spec.detuning(idx));
        m += angle_kernel(basis, &seg) * w;
    }
    Ok(crate::linalg::symmetrize(&m))
}

/// Complex heating form `C^{(j1,j2)}` for ions `j1`, `j2`.
pub fn assemble_h_complex(spec: &ModeSpec, basis: &Basis, j1: usize, j2: usize) -> Result<DMatrix<C64>> {
    check_piecewise(basis)?;
    if j1 >= spec.num_ions || j2 >= spec.num_ions {
        return Err(Error::invalid("ion", "index outside the chain"));
    }
    let len = basis.len();
    let mut c = DMatrix::zeros(len, len);
    for (idx, mode) in spec.modes.iter().enumerate() {
        let w = 0.25
            * (mode.gamma_up + mode.gamma_down)
            * mode.eta
            * mode.eta
            * mode.vector[j1]
            * mode.vector[j2];
        if w == 0.0 {
            continue;
        }
        let seg = segment_moments(basis, spec.detuning(idx));
        c += trajectory_overlap(basis, &seg) * C64::new(w, 0.0);
    }
    Ok(c)
}

/// Real symmetric heating matrix for ions `j1`, `j2`.
pub fn assemble_h(spec: &ModeSpec, basis: &Basis, j1: usize, j2: usize) -> Result<DMatrix<f64>> {
    Ok(real_symmetric_part(&assemble_h_complex(spec, basis, j1, j2)?))
}

fn real_symmetric_part(c: &DMatrix<C64>) -> DMatrix<f64> {
    let re = c.map(|z| z.re);
    crate::linalg::symmetrize(&re)
}

/// Gram matrix of the piecewise basis.
pub fn assemble_gram(basis: &Basis) -> Result<DMatrix<f64>> {
    let d = basis.gram_diagonal()?;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)))
}

/// Build every matrix for one gate.
pub fn assemble(spec: &ModeSpec, basis: &Basis, gate: &GateSpec) -> Result<AssembledProblem> {
    check_piecewise(basis)?;
    gate.check_against(spec.num_ions)?;
    let (a, a_diff) = assemble_constraints(spec, basis)?;
    let mut warnings = Vec::new();
    for m in spec.resonant_modes() {
        warnings.push(Warning::ResonantMode { mode: m });
    }
    let mut constraint_modes = Vec::with_capacity(spec.num_modes());
    for (idx, mode) in spec.modes.iter().enumerate() {
        if mode.vector[gate.p].abs() <= PARTICIPATION_FLOOR && mode.vector[gate.q].abs() <= PARTICIPATION_FLOOR {
            warnings.push(Warning::DroppedConstraint { mode: idx });
        } else {
            constraint_modes.push(idx);
        }
    }
    let m = assemble_m(spec, basis, gate)?;
    let c_pp = assemble_h_complex(spec, basis, gate.p, gate.p)?;
    let c_qq = assemble_h_complex(spec, basis, gate.q, gate.q)?;
    let c_pq = assemble_h_complex(spec, basis, gate.p, gate.q)?;
    let g = assemble_gram(basis)?;
    Ok(AssembledProblem {
        spec: spec.clone(),
        basis: basis.clone(),
        gate: *gate,
        a,
        a_diff,
        constraint_modes,
        h_pp: real_symmetric_part(&c_pp),
        h_qq: real_symmetric_part(&c_qq),
        h_pq: real_symmetric_part(&c_pq),
        m,
        c_pp,
        c_qq,
        c_pq,
        g,
        warnings,
    })
}

fn bilinear_complex(c: &DMatrix<C64>, x: &[f64], y: &[f64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..c.nrows() {
        let mut row = C64::new(0.0, 0.0);
        for j in 0..c.ncols() {
            row += c[(i, j)] * y[j];
        }
        acc += row * x[i];
    }
    acc
}

impl AssembledProblem {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn rotation_angle(&self, c_p: &[f64], c_q: &[f64]) -> f64 {
        rotation_angle(c_p, c_q, self)
    }

    pub fn heating_terms(&self, c_p: &[f64], c_q: &[f64]) -> HeatingTerms {
        HeatingTerms {
            pp: bilinear_complex(&self.c_pp, c_p, c_p).re,
            qq: bilinear_complex(&self.c_qq, c_q, c_q).re,
            pq: bilinear_complex(&self.c_pq, c_p, c_q),
            qp: bilinear_complex(&self.c_pq, c_q, c_p),
        }
    }

    pub fn heating_error(&self, c_p: &[f64], c_q: &[f64], mode: HeatingMode) -> f64 {
        heating_error(c_p, c_q, self, mode)
    }

    /// Real constraint rows `Re A, Im A, Re A^diff, Im A^diff` over the kept
    /// modes (4·k × L).
    pub fn stacked_constraints(&self) -> DMatrix<f64> {
        let rows = self.constraint_modes.len();
        let len = self.len();
        let mut out = DMatrix::zeros(4 * rows, len);
        for (r, &m) in self.constraint_modes.iter().enumerate() {
            for l in 0..len {
                out[(4 * r, l)] = self.a[(m, l)].re;
                out[(4 * r + 1, l)] = self.a[(m, l)].im;
                out[(4 * r + 2, l)] = self.a_diff[(m, l)].re;
                out[(4 * r + 3, l)] = self.a_diff[(m, l)].im;
            }
        }
        out
    }

    /// Worst scale-free residual `|row·c| / (‖row‖·‖c‖)` over the kept
    /// constraint rows of both `A` and `A^diff`.
    pub fn constraint_residual(&self, c: &[f64]) -> f64 {
        let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if cn == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for &m in &self.constraint_modes {
            for mat in [&self.a, &self.a_diff] {
                let mut dot = C64::new(0.0, 0.0);
                let mut rn = 0.0;
                for l in 0..self.len() {
                    dot += mat[(m, l)] * c[l];
                    rn += mat[(m, l)].norm_sqr();
                }
                let rn = rn.sqrt();
                if rn > 0.0 {
                    worst = worst.max(dot.norm() / (rn * cn));
                }
            }
        }
        worst
    }

    /// `∫(Ω_p² + Ω_q²) dt`.
    pub fn rabi_l2(&self, c_p: &[f64], c_q: &[f64]) -> f64 {
        crate::linalg::quad_form(&self.g, c_p, c_p) + crate::linalg::quad_form(&self.g, c_q, c_q)
    }
}

pub fn rotation_angle(c_p: &[f64], c_q: &[f64], problem: &AssembledProblem) -> f64 {
    crate::linalg::quad_form(&problem.m, c_p, c_q)
}

pub fn heating_error(c_p: &[f64], c_q: &[f64], problem: &AssembledProblem, mode: HeatingMode) -> f64 {
    match mode {
        HeatingMode::Full => problem.heating_terms(c_p, c_q).full(),
        HeatingMode::Diagonal => {
            crate::linalg::quad_form(&problem.h_pp, c_p, c_p)
                + crate::linalg::quad_form(&problem.h_qq, c_q, c_q)
        }
    }
}

/// Sampled phase-space trajectories `α_j^m(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    /// `alpha[m][k]` is mode `m` at `times[k]`.
    pub alpha: Vec<Vec<C64>>,
}

/// `α_j^m(t) = (i/2) η_m b_j^m (c · P(Δ_m, t))` on `grid`.
pub fn trajectory(pulse: &Waveform, ion: usize, spec: &ModeSpec, grid: &[f64]) -> Result<TrajectorySample> {
    let basis = pulse.basis();
    if ion >= spec.num_ions {
        return Err(Error::invalid("ion", "index outside the chain"));
    }
    if basis.tau() != spec.tau {
        return Err(Error::invalid("tau", "pulse and mode spec disagree on the gate duration"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("grid", "sample times must be strictly increasing"));
    }
    let mut alpha = vec![Vec::with_capacity(grid.len()); spec.num_modes()];
    for &t in grid {
        if !(t >= 0.0 && t <= spec.tau) {
            return Err(Error::OutOfRange { t, tau: spec.tau });
        }
    }
    for (m, mode) in spec.modes.iter().enumerate() {
        let pref = C64::new(0.0, 0.5 * mode.eta * mode.vector[ion]);
        let delta = spec.detuning(m);
        for &t in grid {
            let pm = basis.partial_moment(delta, t)?;
            let dot: C64 = pm.iter().zip(pulse.coeffs()).map(|(p, c)| p * c).sum();
            alpha[m].push(pref * dot);
        }
    }
    Ok(TrajectorySample {
        times: grid.to_vec(),
        alpha,
    })
}

/// `n + 1` evenly spaced instants covering `[0, τ]`.
pub fn uniform_grid(tau: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n)
        .map(|k| if k == n { tau } else { tau * k as f64 / n as f64 })
        .collect()
}
