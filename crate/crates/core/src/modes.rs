//! Motional environment of a linear ion chain.
//!
//! Lengths are in units of the Coulomb length `(e²/4πε₀ m ω_z²)^{1/3}`, so
//! equilibrium positions minimise
//! `V(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|`
//! and depend on the ion count alone. Frequencies are angular (rad/s).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

const MAX_NEWTON_ITERS: usize = 200;
const GRAD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Axial,
    Transverse,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Axial => "axial",
            Branch::Transverse => "transverse",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub num_ions: usize,
    /// ω_z, rad/s
    pub axial_frequency: f64,
    /// ω_x, rad/s
    pub transverse_frequency: f64,
    pub branch: Branch,
    /// Lamb-Dicke factor of the centre-of-mass mode.
    pub eta_com: f64,
}

impl Default for ChainConfig {
    /// Placeholder trap: 2π·2.18 MHz transverse, 2π·0.29 MHz axial,
    /// η_COM = 0.1. Holds up to roughly fifteen ions in a line.
    fn default() -> Self {
        ChainConfig {
            num_ions: 2,
            axial_frequency: 2.0 * PI * 0.29e6,
            transverse_frequency: 2.0 * PI * 2.18e6,
            branch: Branch::Transverse,
            eta_com: 0.1,
        }
    }
}

impl ChainConfig {
    pub fn with_ions(num_ions: usize) -> Self {
        ChainConfig {
            num_ions,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ions < 2 {
            return Err(Error::invalid("num_ions", "need at least two ions"));
        }
        if !(self.axial_frequency.is_finite() && self.axial_frequency > 0.0) {
            return Err(Error::invalid("axial_frequency", "must be positive"));
        }
        if self.branch == Branch::Transverse
            && !(self.transverse_frequency.is_finite() && self.transverse_frequency > 0.0)
        {
            return Err(Error::invalid("transverse_frequency", "must be positive"));
        }
        if !(self.eta_com.is_finite() && self.eta_com > 0.0) {
            return Err(Error::invalid("eta_com", "must be positive"));
        }
        Ok(())
    }
}

/// Normal modes of one branch, ascending in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasisSet {
    pub frequencies: Vec<f64>,
    /// `vectors[m][j]` is `b_j^m`.
    pub vectors: Vec<Vec<f64>>,
}

impl ModeBasisSet {
    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Mode whose participation vector is closest to uniform.
    pub fn com_index(&self) -> usize {
        com_index(&self.vectors)
    }
}

fn com_index(vectors: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_overlap = -1.0;
    for (m, v) in vectors.iter().enumerate() {
        let n = v.len() as f64;
        let overlap = (v.iter().sum::<f64>() / n.sqrt()).abs();
        if overlap > best_overlap + 1e-12 {
            best = m;
            best_overlap = overlap;
        }
    }
    best
}

fn potential(u: &[f64]) -> f64 {
    let mut v = 0.0;
    for i in 0..u.len() {
        v += 0.5 * u[i] * u[i];
        for j in (i + 1)..u.len() {
            v += 1.0 / (u[j] - u[i]).abs();
        }
    }
    v
}

fn gradient(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let mut g = vec![0.0; n];
    for i in 0..n {
        // accumulate small Coulomb terms first
        let mut push = 0.0;
        for j in (0..n).rev() {
            if j == i {
                continue;
            }
            let d = u[i] - u[j];
            push += d.signum() / (d * d);
        }
        g[i] = u[i] - push;
    }
    g
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Axial Hessian `A` of the dimensionless potential.
pub fn axial_hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = 1.0;
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                a[(i, j)] = -c;
                diag += c;
            }
        }
        a[(i, i)] = diag;
    }
    a
}

fn sorted_strictly(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[0] < w[1])
}

fn mirror(u: &mut [f64]) {
    let n = u.len();
    let orig: Vec<f64> = u.to_vec();
    for i in 0..n {
        u[i] = 0.5 * (orig[i] - orig[n - 1 - i]);
    }
}

/// Equilibrium positions of `n` ions, ascending, by damped Newton iteration.
pub fn solve_equilibrium(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("num_ions", "need at least two ions"));
    }
    let half = 0.5 * (n as f64).powf(0.56);
    let mut u: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut g = gradient(&u);
    let mut gnorm = norm(&g);
    let mut stalled = 0;
    for _ in 0..MAX_NEWTON_ITERS {
        if gnorm <= GRAD_TOL * 0.1 {
            break;
        }
        let hess = axial_hessian(&u);
        let rhs = DVector::from_iterator(n, g.iter().map(|x| -x));
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => rhs, // steepest descent if the Hessian is not yet positive
        };
        let v_old = potential(&u);
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = u.iter().zip(step.iter()).map(|(a, d)| a + scale * d).collect();
            mirror(&mut trial);
            if sorted_strictly(&trial) {
                let g_trial = gradient(&trial);
                let gn = norm(&g_trial);
                let v_new = potential(&trial);
                if v_new <= v_old + 4.0 * f64::EPSILON * v_old.abs() || gn < gnorm {
                    u = trial;
                    g = g_trial;
                    if gn >= gnorm {
                        stalled += 1;
                    }
                    gnorm = gn;
                    accepted = true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if !accepted || stalled > 5 {
            break;
        }
    }
    if gnorm > GRAD_TOL {
        return Err(Error::NonConvergence {
            what: "equilibrium Newton iteration",
            iterations: MAX_NEWTON_ITERS,
            residual: gnorm,
        });
    }
    Ok(u)
}

/// Gradient norm of the potential at `u`; exposed for diagnostics.
pub fn equilibrium_residual(u: &[f64]) -> f64 {
    norm(&gradient(u))
}

/// Normal modes of the chain at equilibrium `positions`.
pub fn normal_modes(positions: &[f64], config: &ChainConfig) -> Result<ModeBasisSet> {
    config.validate()?;
    if positions.len() != config.num_ions {
        return Err(Error::LengthMismatch {
            field: "positions",
            expected: config.num_ions,
            found: positions.len(),
        });
    }
    let a = axial_hessian(positions);
    let beta = config.transverse_frequency / config.axial_frequency;
    let k = match config.branch {
        Branch::Axial => a,
        Branch::Transverse => {
            let n = positions.len();
            DMatrix::identity(n, n) * (beta * beta + 0.5) - a * 0.5
        }
    };
    let (vals, vecs) = linalg::sym_eigen(&k)?;
    if let Some(bad) = vals.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::Unstable {
            branch: config.branch.name(),
            beta,
            eigenvalue: *bad,
        });
    }
    let frequencies = vals.iter().map(|l| config.axial_frequency * l.sqrt()).collect();
    let vectors = (0..vals.len())
        .map(|m| vecs.column(m).iter().copied().collect())
        .collect();
    Ok(ModeBasisSet {
        frequencies,
        vectors,
    })
}

/// One motional mode as seen by the gate.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// ω_m, rad/s
    pub omega: f64,
    pub eta: f64,
    /// `b_j^m` for every ion `j`.
    pub vector: Vec<f64>,
    /// Γ_m^↑, quanta/s
    pub gamma_up: f64,
    /// Γ_m^↓, quanta/s
    pub gamma_down: f64,
}

/// Full motional environment for one gate: modes, laser detuning μ and
/// duration τ.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub num_ions: usize,
    /// μ, rad/s
    pub mu: f64,
    /// τ, s
    pub tau: f64,
    pub modes: Vec<Mode>,
}

impl ModeSpec {
    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    /// Δ_m = ω_m − μ.
    pub fn detuning(&self, m: usize) -> f64 {
        self.modes[m].omega - self.mu
    }

    pub fn detunings(&self) -> Vec<f64> {
        (0..self.modes.len()).map(|m| self.detuning(m)).collect()
    }

    pub fn etas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.eta).collect()
    }

    pub fn gamma_total(&self, m: usize) -> f64 {
        self.modes[m].gamma_up + self.modes[m].gamma_down
    }

    /// Modes driven exactly on resonance (Δ_m = 0).
    pub fn resonant_modes(&self) -> Vec<usize> {
        (0..self.modes.len())
            .filter(|&m| self.detuning(m) == 0.0)
            .collect()
    }

    pub fn com_index(&self) -> usize {
        let vs: Vec<Vec<f64>> = self.modes.iter().map(|m| m.vector.clone()).collect();
        com_index(&vs)
    }

    /// The mode nearest in frequency to the COM mode (the breathing/tilt
    /// mode of the transverse branch).
    pub fn breathing_index(&self) -> Option<usize> {
        let com = self.com_index();
        let w = self.modes[com].omega;
        (0..self.modes.len())
            .filter(|&m| m != com)
            .min_by(|&a, &b| {
                (self.modes[a].omega - w)
                    .abs()
                    .partial_cmp(&(self.modes[b].omega - w).abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
    }

    /// Same environment with a different laser detuning.
    pub fn with_mu(&self, mu: f64) -> ModeSpec {
        ModeSpec {
            mu,
            ..self.clone()
        }
    }

    /// Same environment with replaced heating rates.
    pub fn with_gammas(&self, gamma_up: &[f64], gamma_down: &[f64]) -> Result<ModeSpec> {
        check_rates(gamma_up, gamma_down, self.modes.len())?;
        let mut out = self.clone();
        for (m, mode) in out.modes.iter_mut().enumerate() {
            mode.gamma_up = gamma_up[m];
            mode.gamma_down = gamma_down[m];
        }
        Ok(out)
    }

    /// Full invariant check, including orthonormality of the participation
    /// vectors to `ortho_tol`.
    pub fn validate(&self, ortho_tol: f64) -> Result<()> {
        if self.num_ions < 2 {
            return Err(Error::invalid("num_ions", "need at least two ions"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid("tau_s", "must be finite and positive"));
        }
        if !self.mu.is_finite() {
            return Err(Error::invalid("mu_rad_per_s", "must be finite"));
        }
        if self.modes.len() != self.num_ions {
            return Err(Error::LengthMismatch {
                field: "modes",
                expected: self.num_ions,
                found: self.modes.len(),
            });
        }
        for mode in &self.modes {
            if mode.vector.len() != self.num_ions {
                return Err(Error::LengthMismatch {
                    field: "b",
                    expected: self.num_ions,
                    found: mode.vector.len(),
                });
            }
            if !mode.omega.is_finite() {
                return Err(Error::invalid("omega_rad_per_s", "must be finite"));
            }
            if !(mode.eta.is_finite() && mode.eta > 0.0) {
                return Err(Error::invalid("eta", "must be positive"));
            }
            if !(mode.gamma_up.is_finite() && mode.gamma_up >= 0.0) {
                return Err(Error::invalid("gamma_up_per_s", "must be non-negative"));
            }
            if !(mode.gamma_down.is_finite() && mode.gamma_down >= 0.0) {
                return Err(Error::invalid("gamma_down_per_s", "must be non-negative"));
            }
            if mode.vector.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("b", "entries must be finite"));
            }
        }
        let dev = self.orthonormality_defect();
        if dev > ortho_tol {
            return Err(Error::invalid(
                "b",
                alloc::format!("participation vectors not orthonormal (defect {dev:e})"),
            ));
        }
        Ok(())
    }

    /// `max |⟨b^i, b^j⟩ − δ_ij|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.modes.iter().enumerate() {
            for (j, b) in self.modes.iter().enumerate() {
                let dot: f64 = a.vector.iter().zip(&b.vector).map(|(x, y)| x * y).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

fn check_rates(up: &[f64], down: &[f64], n: usize) -> Result<()> {
    if up.len() != n {
        return Err(Error::LengthMismatch {
            field: "gamma_up",
            expected: n,
            found: up.len(),
        });
    }
    if down.len() != n {
        return Err(Error::LengthMismatch {
            field: "gamma_down",
            expected: n,
            found: down.len(),
        });
    }
    if up.iter().chain(down).any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(Error::invalid("gamma", "heating rates must be non-negative"));
    }
    Ok(())
}

/// Assemble a [`ModeSpec`] from the chain model. Lamb-Dicke factors scale
/// as `η_m = η_COM·√(ω_COM/ω_m)`.
pub fn build_mode_spec(
    config: &ChainConfig,
    mu: f64,
    tau: f64,
    gamma_up: &[f64],
    gamma_down: &[f64],
) -> Result<ModeSpec> {
    config.validate()?;
    check_rates(gamma_up, gamma_down, config.num_ions)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", "must be finite and positive"));
    }
    if !mu.is_finite() {
        return Err(Error::invalid("mu", "must be finite"));
    }
    let positions = solve_equilibrium(config.num_ions)?;
    let set = normal_modes(&positions, config)?;
    Ok(mode_spec_from_set(&set, config.eta_com, mu, tau, gamma_up, gamma_down))
}

pub(crate) fn mode_spec_from_set(
    set: &ModeBasisSet,
    eta_com: f64,
    mu: f64,
    tau: f64,
    gamma_up: &[f64],
    gamma_down: &[f64],
) -> ModeSpec {
    let w_com = set.frequencies[set.com_index()];
    let modes = (0..set.len())
        .map(|m| Mode {
            omega: set.frequencies[m],
            eta: eta_com * (w_com / set.frequencies[m]).sqrt(),
            vector: set.vectors[m].clone(),
            gamma_up: gamma_up[m],
            gamma_down: gamma_down[m],
        })
        .collect();
    ModeSpec {
        num_ions: set.len(),
        mu,
        tau,
        modes,
    }
}

/// Normal modes for a chain config in one call.
pub fn chain_modes(config: &ChainConfig) -> Result<ModeBasisSet> {
    let positions = solve_equilibrium(config.num_ions)?;
    normal_modes(&positions, config)
}
