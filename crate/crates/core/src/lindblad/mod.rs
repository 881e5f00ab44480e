//! Open-system check of a pulse pair: the two driven spins plus every
//! motional mode, integrated under the Lindblad equation with heating and
//! cooling on each mode.
//!
//! Two engines share one problem description ([`Generators`]):
//!
//! * [`Engine::Factorized`] (default) uses that `H(t)` commutes with
//!   `σ_x^p` and `σ_x^q`. In their joint eigenbasis the state splits into
//!   16 spin blocks, each a tensor product over modes of independently
//!   evolving `(n_cut+1)²` matrices. Exact, and cheap enough for sweeps.
//! * [`Engine::Dense`] propagates the full `4(n_cut+1)^N` density matrix with
//!   sparse operator products. Used to cross-check the factorized engine on
//!   small cases.
//!
//! Both integrate with fixed-step classic RK4 on a grid aligned to segment
//! boundaries.

mod dense;
mod factorized;
mod fidelity;
mod rk4;

use alloc::vec::Vec;
use nalgebra::Matrix4;
use num_complex::Complex64 as C64;

use crate::assembly::GateSpec;
use crate::basis::Waveform;
use crate::error::{Error, Result};
use crate::modes::ModeSpec;
use crate::Warning;

pub use dense::{dense_dimension, DenseOperators};
pub use fidelity::{pure_state_fidelity, reduced_fidelity};

/// Trace drift that aborts an integration.
pub const TRACE_ABORT: f64 = 1e-6;
/// Steps between re-Hermitisations.
pub const HERMITIZE_EVERY: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `min(2π/max|Δ_m|, 1/max|Ω|) / divisor`; divisor must be at least 20.
    Auto { divisor: f64 },
    Fixed(f64),
}

impl Default for StepSize {
    fn default() -> Self {
        StepSize::Auto { divisor: 40.0 }
    }
}

/// Initial two-spin state; amplitudes are in the `|z_p z_q⟩` order
/// `|00⟩, |01⟩, |10⟩, |11⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialSpin {
    ZeroZero,
    PlusPlus,
    Custom([C64; 4]),
}

impl InitialSpin {
    pub fn name(&self) -> &'static str {
        match self {
            InitialSpin::ZeroZero => "zero_zero",
            InitialSpin::PlusPlus => "plus_plus",
            InitialSpin::Custom(_) => "custom",
        }
    }

    pub fn amplitudes(&self) -> Result<[C64; 4]> {
        let z = C64::new(0.0, 0.0);
        let v = match *self {
            InitialSpin::ZeroZero => [C64::new(1.0, 0.0), z, z, z],
            InitialSpin::PlusPlus => [C64::new(0.5, 0.0); 4],
            InitialSpin::Custom(v) => v,
        };
        let n: f64 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("initial_spin", "state vector must be nonzero and finite"));
        }
        Ok(v.map(|a| a / n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPhonon {
    Vacuum,
    /// Mean occupation per mode.
    Thermal(Vec<f64>),
}

impl InitialPhonon {
    pub fn name(&self) -> &'static str {
        match self {
            InitialPhonon::Vacuum => "vacuum",
            InitialPhonon::Thermal(_) => "thermal",
        }
    }

    /// Fock populations for one mode, truncated and renormalised.
    fn populations(&self, mode: usize, n_cut: usize) -> Vec<f64> {
        let mut p = alloc::vec![0.0; n_cut + 1];
        match self {
            InitialPhonon::Vacuum => p[0] = 1.0,
            InitialPhonon::Thermal(nbar) => {
                let nb = nbar[mode];
                if nb == 0.0 {
                    p[0] = 1.0;
                } else {
                    let r = nb / (1.0 + nb);
                    let mut w = 1.0;
                    for x in p.iter_mut() {
                        *x = w;
                        w *= r;
                    }
                    let s: f64 = p.iter().sum();
                    p.iter_mut().for_each(|x| *x /= s);
                }
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Factorized,
    Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Highest Fock state kept per mode.
    pub n_cut: usize,
    pub dt: StepSize,
    pub initial_spin: InitialSpin,
    pub initial_phonon: InitialPhonon,
    /// Top-level population above which a leakage warning is raised.
    pub leakage_threshold: f64,
    pub engine: Engine,
    /// Bytes the dense engine may allocate for its state and RK4 buffers.
    pub memory_budget: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_cut: 10,
            dt: StepSize::default(),
            initial_spin: InitialSpin::ZeroZero,
            initial_phonon: InitialPhonon::Vacuum,
            leakage_threshold: 1e-4,
            engine: Engine::Factorized,
            memory_budget: 1 << 30,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, num_modes: usize) -> Result<()> {
        if self.n_cut < 1 {
            return Err(Error::invalid("n_cut", "must be at least 1"));
        }
        match self.dt {
            StepSize::Auto { divisor } if !(divisor >= 20.0 && divisor.is_finite()) => {
                return Err(Error::invalid("dt", "auto divisor must be at least 20"));
            }
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::invalid("dt", "must be positive"));
            }
            _ => {}
        }
        if let InitialPhonon::Thermal(nbar) = &self.initial_phonon {
            if nbar.len() != num_modes {
                return Err(Error::LengthMismatch {
                    field: "thermal occupations",
                    expected: num_modes,
                    found: nbar.len(),
                });
            }
            if nbar.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
                return Err(Error::invalid("thermal occupations", "must be non-negative"));
            }
        }
        if !(self.leakage_threshold >= 0.0) {
            return Err(Error::invalid("leakage_threshold", "must be non-negative"));
        }
        self.initial_spin.amplitudes()?;
        Ok(())
    }
}

/// Coupling of one mode to the two driven ions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeDrive {
    /// `Δ_m`, rad/s
    pub delta: f64,
    /// `η_m b_p^m / 2`
    pub k_p: f64,
    /// `η_m b_q^m / 2`
    pub k_q: f64,
    pub gamma_up: f64,
    pub gamma_down: f64,
}

/// One constant-amplitude stretch of the integration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stretch {
    pub start: f64,
    pub dt: f64,
    pub steps: usize,
    pub omega_p: f64,
    pub omega_q: f64,
}

/// Engine-independent description of the driven, damped system.
#[derive(Debug, Clone, PartialEq)]
pub struct Generators {
    pub modes: Vec<ModeDrive>,
    pub stretches: Vec<Stretch>,
    pub n_cut: usize,
    pub psi0: [C64; 4],
    /// Initial Fock populations per mode (diagonal states only).
    pub populations: Vec<Vec<f64>>,
    pub engine: Engine,
    /// Largest step actually used.
    pub dt_max: f64,
}

impl Generators {
    pub fn total_steps(&self) -> usize {
        self.stretches.iter().map(|s| s.steps).sum()
    }

    /// `g_j^m(t) / i` without the amplitude: `η_m b_j^m/2 · e^{iΔ_m t}`.
    fn phase(&self, m: usize, t: f64) -> C64 {
        C64::new(0.0, self.modes[m].delta * t).exp()
    }

    /// Same generators with every rate set to zero.
    pub fn noiseless(&self) -> Generators {
        let mut g = self.clone();
        for m in g.modes.iter_mut() {
            m.gamma_up = 0.0;
            m.gamma_down = 0.0;
        }
        g
    }
}

/// Collect the drive, dissipation and step grid for one simulation.
pub fn build_generators(
    spec: &ModeSpec,
    pulses: (&Waveform, &Waveform),
    gate: &GateSpec,
    sim: &SimConfig,
) -> Result<Generators> {
    gate.check_against(spec.num_ions)?;
    sim.validate(spec.num_modes())?;
    let (wp, wq) = pulses;
    if wp.basis() != wq.basis() {
        return Err(Error::invalid("pulses", "both ions must share one basis"));
    }
    let basis = wp.basis();
    if !basis.is_piecewise() {
        return Err(Error::Unsupported("simulation needs piecewise-constant pulses"));
    }
    if basis.tau() != spec.tau {
        return Err(Error::invalid("tau", "pulse and mode spec disagree on the gate duration"));
    }
    let modes: Vec<ModeDrive> = spec
        .modes
        .iter()
        .enumerate()
        .map(|(m, md)| ModeDrive {
            delta: spec.detuning(m),
            k_p: 0.5 * md.eta * md.vector[gate.p],
            k_q: 0.5 * md.eta * md.vector[gate.q],
            gamma_up: md.gamma_up,
            gamma_down: md.gamma_down,
        })
        .collect();
    let dt_target = match sim.dt {
        StepSize::Fixed(dt) => dt,
        StepSize::Auto { divisor } => {
            let dmax = modes.iter().fold(0.0f64, |a, m| a.max(m.delta.abs()));
            let omax = wp.max_abs().max(wq.max_abs());
            let mut base = f64::INFINITY;
            if dmax > 0.0 {
                base = base.min(2.0 * core::f64::consts::PI / dmax);
            }
            if omax > 0.0 {
                base = base.min(1.0 / omax);
            }
            if !base.is_finite() {
                base = spec.tau;
            }
            base / divisor
        }
    };
    let mut stretches = Vec::with_capacity(basis.len());
    let mut dt_max = 0.0f64;
    for l in 0..basis.len() {
        let (a, b) = basis.segment(l);
        let len = b - a;
        let steps = (len / dt_target).ceil().max(1.0) as usize;
        let dt = len / steps as f64;
        dt_max = dt_max.max(dt);
        stretches.push(Stretch {
            start: a,
            dt,
            steps,
            omega_p: wp.coeffs()[l],
            omega_q: wq.coeffs()[l],
        });
    }
    let engine = sim.engine;
    if engine == Engine::Dense {
        let d = dense_dimension(spec.num_modes(), sim.n_cut)?;
        let required = d.saturating_mul(d).saturating_mul(16 * 7);
        if required > sim.memory_budget {
            return Err(Error::OverBudget {
                required,
                budget: sim.memory_budget,
            });
        }
    }
    Ok(Generators {
        populations: (0..modes.len()).map(|m| sim.initial_phonon.populations(m, sim.n_cut)).collect(),
        modes,
        stretches,
        n_cut: sim.n_cut,
        psi0: sim.initial_spin.amplitudes()?,
        engine,
        dt_max,
    })
}

/// What an integration leaves behind, reduced to the two spins.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolved {
    /// Reduced spin density matrix in the `|z_p z_q⟩` basis.
    pub spin: Matrix4<C64>,
    pub trace_residual: f64,
    /// Largest top-Fock-level population seen, per mode.
    pub leakage: Vec<f64>,
    pub steps: usize,
}

/// Integrate `dρ/dt = −i[H, ρ] + noisy·Σ_m (Γ↑D[a†] + Γ↓D[a])ρ`.
pub fn evolve(gens: &Generators, noisy: bool) -> Result<Evolved> {
    let owned;
    let g = if noisy {
        gens
    } else {
        owned = gens.noiseless();
        &owned
    };
    match g.engine {
        Engine::Factorized => factorized::evolve(g),
        Engine::Dense => dense::evolve(g),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub infidelity: f64,
    pub fidelity_definition: &'static str,
    pub trace_residual: f64,
    /// Smallest eigenvalue of the Hermitian part of the reduced spin state.
    pub min_eig: f64,
    /// Largest top-level population over modes and time.
    pub leakage: f64,
    pub steps: usize,
    pub n_cut: usize,
    pub dt: f64,
    pub initial_spin: &'static str,
    pub initial_phonon: &'static str,
    pub warnings: Vec<Warning>,
    pub noisy_spin: Matrix4<C64>,
    pub ideal_spin: Matrix4<C64>,
}

/// Noisy and noiseless runs of the same pulse pair, compared on the spins.
pub fn simulate_report(
    spec: &ModeSpec,
    pulses: (&Waveform, &Waveform),
    gate: &GateSpec,
    sim: &SimConfig,
) -> Result<SimReport> {
    let gens = build_generators(spec, pulses, gate, sim)?;
    let noisy = evolve(&gens, true)?;
    let ideal = evolve(&gens, false)?;
    let f = reduced_fidelity(&noisy.spin, &ideal.spin)?;
    let mut warnings = Vec::new();
    let mut worst = 0.0f64;
    for (m, (&a, &b)) in noisy.leakage.iter().zip(&ideal.leakage).enumerate() {
        let pop = a.max(b);
        worst = worst.max(pop);
        if pop > sim.leakage_threshold {
            warnings.push(Warning::Leakage { mode: m, population: pop });
        }
    }
    Ok(SimReport {
        infidelity: 1.0 - f,
        fidelity_definition: "squared_uhlmann",
        trace_residual: noisy.trace_residual.max(ideal.trace_residual),
        min_eig: fidelity::min_eigenvalue(&noisy.spin)?,
        leakage: worst,
        steps: noisy.steps,
        n_cut: sim.n_cut,
        dt: gens.dt_max,
        initial_spin: sim.initial_spin.name(),
        initial_phonon: sim.initial_phonon.name(),
        warnings,
        noisy_spin: noisy.spin,
        ideal_spin: ideal.spin,
    })
}

/// `exp(iΘ σ_x^p σ_x^q)|ψ₀⟩` in the `|z_p z_q⟩` basis.
pub fn ms_target(theta: f64, psi0: &[C64; 4]) -> [C64; 4] {
    let x = to_x_basis(psi0);
    let mut out = [C64::new(0.0, 0.0); 4];
    for (s, o) in out.iter_mut().enumerate() {
        let (sp, sq) = spin_signs(s);
        *o = x[s] * C64::new(0.0, theta * sp * sq).exp();
    }
    to_x_basis(&out)
}

/// `(σ_x^p, σ_x^q)` eigenvalues of X-basis label `s`.
pub(crate) fn spin_signs(s: usize) -> (f64, f64) {
    let sp = if s & 2 == 0 { 1.0 } else { -1.0 };
    let sq = if s & 1 == 0 { 1.0 } else { -1.0 };
    (sp, sq)
}

/// `(H⊗H) v`; its own inverse.
pub(crate) fn to_x_basis(v: &[C64; 4]) -> [C64; 4] {
    let h = [[1.0, 1.0, 1.0, 1.0], [1.0, -1.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0], [1.0, -1.0, -1.0, 1.0]];
    let mut out = [C64::new(0.0, 0.0); 4];
    for (i, row) in h.iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(a, b)| b * (0.5 * a)).sum();
    }
    out
}

/// `(H⊗H) R (H⊗H)`.
pub(crate) fn conjugate_hadamard(r: &Matrix4<C64>) -> Matrix4<C64> {
    let h = Matrix4::new(
        1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, -1.0, 1.0,
    )
    .map(|x: f64| C64::new(0.5 * x, 0.0));
    h * r * h
}
