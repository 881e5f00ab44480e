//! Run configuration, read from a JSON file passed with `--config`.
//!
//! Every field has a default, so `{}` is a valid config describing a
//! two-ion transverse chain with the gate on ions 1 and 2.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use msgate_core::assembly::GateSpec;
use msgate_core::basis::Basis;
use msgate_core::lindblad::{Engine, InitialPhonon, InitialSpin, SimConfig, StepSize};
use msgate_core::modes::{build_mode_spec, Branch, ChainConfig, ModeSpec};
use msgate_core::synth::Method;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{GammaScenario, Padding, ScenarioKind};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSection,
    /// Load the motional environment from a ModeSpec file instead of
    /// solving the chain. `mu_rad_per_s` in this config still overrides.
    pub mode_spec_file: Option<PathBuf>,
    /// Laser detuning. Defaults to 2π kHz above the COM mode.
    pub mu_rad_per_s: Option<f64>,
    pub tau_s: f64,
    pub gate: GateSection,
    /// Heating rate applied to every mode, both directions, unless a
    /// per-mode list is given.
    pub gamma_per_s: Rates,
    /// Number of piecewise-constant segments. Defaults to 6N + 20.
    pub segments: Option<usize>,
    pub method: String,
    pub sim: SimSection,
    pub sweep: SweepSection,
    pub robustness: RobustnessSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            chain: ChainSection::default(),
            mode_spec_file: None,
            mu_rad_per_s: None,
            tau_s: 150e-6,
            gate: GateSection::default(),
            gamma_per_s: Rates::Uniform(100.0),
            segments: None,
            method: Method::HeatingOptimal.name().to_string(),
            sim: SimSection::default(),
            sweep: SweepSection::default(),
            robustness: RobustnessSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSection {
    pub num_ions: usize,
    pub axial_frequency_rad_per_s: f64,
    pub transverse_frequency_rad_per_s: f64,
    /// `transverse` or `axial`.
    pub branch: String,
    pub eta_com: f64,
}

impl Default for ChainSection {
    fn default() -> Self {
        let c = ChainConfig::default();
        ChainSection {
            num_ions: c.num_ions,
            axial_frequency_rad_per_s: c.axial_frequency,
            transverse_frequency_rad_per_s: c.transverse_frequency,
            branch: c.branch.name().to_string(),
            eta_com: c.eta_com,
        }
    }
}

impl ChainSection {
    pub fn to_chain_config(&self) -> Result<ChainConfig> {
        let branch = match self.branch.as_str() {
            "transverse" => Branch::Transverse,
            "axial" => Branch::Axial,
            other => return Err(Error::Config(format!("chain.branch: unknown branch `{other}`"))),
        };
        Ok(ChainConfig {
            num_ions: self.num_ions,
            axial_frequency: self.axial_frequency_rad_per_s,
            transverse_frequency: self.transverse_frequency_rad_per_s,
            branch,
            eta_com: self.eta_com,
        })
    }
}

/// Ion indices are 1-based here and converted on use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    pub p: usize,
    pub q: usize,
    pub theta: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            p: 1,
            q: 2,
            theta: PI / 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Uniform(f64),
    PerMode { up: Vec<f64>, down: Vec<f64> },
}

impl Rates {
    pub fn resolve(&self, num_modes: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Rates::Uniform(g) => (vec![*g; num_modes], vec![*g; num_modes]),
            Rates::PerMode { up, down } => (up.clone(), down.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub n_cut: usize,
    /// Fixed step in seconds; when absent the step is chosen from the
    /// fastest detuning and drive strength divided by `dt_divisor`.
    pub dt_s: Option<f64>,
    pub dt_divisor: f64,
    /// `00`, `++`, or four complex amplitudes as `[[re, im], ...]`.
    pub initial_spin: SpinChoice,
    /// Mean thermal occupation per mode; absent means vacuum.
    pub thermal_nbar: Option<Vec<f64>>,
    pub leakage_threshold: f64,
    /// `factorized` or `dense`.
    pub engine: String,
    pub memory_budget_bytes: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        let s = SimConfig::default();
        let divisor = match s.dt {
            StepSize::Auto { divisor } => divisor,
            StepSize::Fixed(_) => 40.0,
        };
        SimSection {
            n_cut: s.n_cut,
            dt_s: None,
            dt_divisor: divisor,
            initial_spin: SpinChoice::Named("00".into()),
            thermal_nbar: None,
            leakage_threshold: s.leakage_threshold,
            engine: "factorized".into(),
            memory_budget_bytes: s.memory_budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpinChoice {
    Named(String),
    Amplitudes([[f64; 2]; 4]),
}

impl SimSection {
    pub fn to_sim_config(&self) -> Result<SimConfig> {
        let initial_spin = match &self.initial_spin {
            SpinChoice::Named(s) if s == "00" => InitialSpin::ZeroZero,
            SpinChoice::Named(s) if s == "++" => InitialSpin::PlusPlus,
            SpinChoice::Named(s) => return Err(Error::Config(format!("sim.initial_spin: unknown state `{s}`"))),
            SpinChoice::Amplitudes(a) => {
                InitialSpin::Custom(a.map(|[re, im]| num_complex::Complex64::new(re, im)))
            }
        };
        let engine = match self.engine.as_str() {
            "factorized" => Engine::Factorized,
            "dense" => Engine::Dense,
            other => return Err(Error::Config(format!("sim.engine: unknown engine `{other}`"))),
        };
        Ok(SimConfig {
            n_cut: self.n_cut,
            dt: match self.dt_s {
                Some(dt) => StepSize::Fixed(dt),
                None => StepSize::Auto {
                    divisor: self.dt_divisor,
                },
            },
            initial_spin,
            initial_phonon: match &self.thermal_nbar {
                Some(n) => InitialPhonon::Thermal(n.clone()),
                None => InitialPhonon::Vacuum,
            },
            leakage_threshold: self.leakage_threshold,
            engine,
            memory_budget: self.memory_budget_bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub points_per_interval: usize,
    /// Width of the two outer intervals as a fraction of the mean mode
    /// spacing. Ignored when `padding_rad_per_s` is set.
    pub padding_fraction: f64,
    pub padding_rad_per_s: Option<f64>,
    pub methods: Vec<String>,
    /// Defaults to on for chains of up to three ions.
    pub simulate: Option<bool>,
    /// Rates used at every point; absent means the config's own rates.
    pub scenario: Option<GammaScenario>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            points_per_interval: 20,
            padding_fraction: 1.0,
            padding_rad_per_s: None,
            methods: Method::ALL.iter().map(|m| m.name().to_string()).collect(),
            simulate: None,
            scenario: None,
        }
    }
}

impl SweepSection {
    pub fn padding(&self) -> Padding {
        match self.padding_rad_per_s {
            Some(w) => Padding::Absolute(w),
            None => Padding::Fraction(self.padding_fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSection {
    /// Rate the pulse is optimised for.
    pub design_gamma: f64,
    /// μ sits this far above the COM mode.
    pub delta_rad_per_s: f64,
    pub gamma_values: Vec<f64>,
    pub scenarios: Vec<ScenarioKind>,
    /// Rate held on the COM or breathing mode in the partial scenarios.
    pub fixed_gamma: f64,
}

impl Default for RobustnessSection {
    fn default() -> Self {
        RobustnessSection {
            design_gamma: 100.0,
            delta_rad_per_s: 2.0 * PI * 1e3,
            gamma_values: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 75.0],
            scenarios: vec![ScenarioKind::AllGamma, ScenarioKind::AllButCom, ScenarioKind::AllButBm],
            fixed_gamma: 100.0,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        io::load_json(path)
    }

    pub fn method(&self) -> Result<Method> {
        parse_method(&self.method)
    }

    /// The motional environment at the configured detuning.
    pub fn mode_spec(&self) -> Result<ModeSpec> {
        let spec = match &self.mode_spec_file {
            Some(path) => io::load_mode_spec(path)?,
            None => {
                let chain = self.chain.to_chain_config()?;
                let (up, down) = self.gamma_per_s.resolve(chain.num_ions);
                let mut spec = build_mode_spec(&chain, 0.0, self.tau_s, &up, &down)?;
                spec.mu = spec.modes[spec.com_index()].omega + 2.0 * PI * 1e3;
                spec
            }
        };
        Ok(match self.mu_rad_per_s {
            Some(mu) => spec.with_mu(mu),
            None => spec,
        })
    }

    pub fn gate(&self) -> Result<GateSpec> {
        if self.gate.p == 0 || self.gate.q == 0 {
            return Err(Error::Config("gate.p and gate.q are 1-based".into()));
        }
        Ok(GateSpec::new(self.gate.p - 1, self.gate.q - 1, self.gate.theta)?)
    }

    pub fn segments(&self, num_ions: usize) -> usize {
        self.segments.unwrap_or_else(|| Basis::default_segments(num_ions))
    }

    pub fn sweep_methods(&self) -> Result<Vec<Method>> {
        self.sweep.methods.iter().map(|m| parse_method(m)).collect()
    }
}

pub fn parse_method(name: &str) -> Result<Method> {
    Method::from_name(name).ok_or_else(|| Error::Config(format!("unknown method `{name}`")))
}
