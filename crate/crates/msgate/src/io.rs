//! On-disk formats.
//!
//! JSON files carry a `version` field and are written with shortest
//! round-trip float formatting, so `load(save(x))` is bit-identical. CSV
//! files use a fixed column order and the same float formatting.

use std::fs;
use std::io::Write;
use std::path::Path;

use msgate_core::assembly::TrajectorySample;
use msgate_core::basis::{Basis, Waveform};
use msgate_core::lindblad::SimReport;
use msgate_core::modes::{Mode, ModeSpec};
use msgate_core::synth::SynthesisResult;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// Orthonormality tolerance applied to loaded participation vectors.
pub const LOAD_ORTHO_TOL: f64 = 1e-8;

/// How the conventional baseline is built; written into every synthesis
/// file so comparisons stay auditable.
pub const CONVENTIONAL_CONSTRUCTION: &str =
    "uniform drive projected onto the closure and robustness kernel, scaled to the target angle";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpecFile {
    pub version: u32,
    pub num_ions: usize,
    pub mu_rad_per_s: f64,
    pub tau_s: f64,
    pub modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub omega_rad_per_s: f64,
    pub eta: f64,
    pub b: Vec<f64>,
    pub gamma_up_per_s: f64,
    pub gamma_down_per_s: f64,
}

impl From<&ModeSpec> for ModeSpecFile {
    fn from(spec: &ModeSpec) -> Self {
        ModeSpecFile {
            version: FORMAT_VERSION,
            num_ions: spec.num_ions,
            mu_rad_per_s: spec.mu,
            tau_s: spec.tau,
            modes: spec
                .modes
                .iter()
                .map(|m| ModeEntry {
                    omega_rad_per_s: m.omega,
                    eta: m.eta,
                    b: m.vector.clone(),
                    gamma_up_per_s: m.gamma_up,
                    gamma_down_per_s: m.gamma_down,
                })
                .collect(),
        }
    }
}

impl ModeSpecFile {
    /// Shape checks that name the offending field, then the physical
    /// invariants of [`ModeSpec::validate`].
    pub fn into_spec(self, path: &Path) -> Result<ModeSpec> {
        if self.version != FORMAT_VERSION {
            return Err(Error::schema(path, "version", format!("unsupported version {}", self.version)));
        }
        if self.modes.len() != self.num_ions {
            return Err(Error::schema(
                path,
                "modes",
                format!("expected {} modes, found {}", self.num_ions, self.modes.len()),
            ));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if m.b.len() != self.num_ions {
                return Err(Error::schema(
                    path,
                    format!("modes[{i}].b"),
                    format!("expected {} entries, found {}", self.num_ions, m.b.len()),
                ));
            }
        }
        let spec = ModeSpec {
            num_ions: self.num_ions,
            mu: self.mu_rad_per_s,
            tau: self.tau_s,
            modes: self
                .modes
                .into_iter()
                .map(|m| Mode {
                    omega: m.omega_rad_per_s,
                    eta: m.eta,
                    vector: m.b,
                    gamma_up: m.gamma_up_per_s,
                    gamma_down: m.gamma_down_per_s,
                })
                .collect(),
        };
        spec.validate(LOAD_ORTHO_TOL)?;
        Ok(spec)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn to_json<T: Serialize>(value: &T, path: &Path) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_text(path, &to_json(value, path)?)
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.into(),
        source,
    })
}

pub fn save_mode_spec(spec: &ModeSpec, path: &Path) -> Result<()> {
    save_json(&ModeSpecFile::from(spec), path)
}

pub fn load_mode_spec(path: &Path) -> Result<ModeSpec> {
    load_json::<ModeSpecFile>(path)?.into_spec(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PulseRow {
    t_start_s: f64,
    t_end_s: f64,
    omega_p_rad_per_s: f64,
    omega_q_rad_per_s: f64,
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.into(),
        source,
    }
}

/// Piecewise pulse pair, one row per segment.
pub fn save_pulse_csv(p: &Waveform, q: &Waveform, path: &Path) -> Result<()> {
    let basis = p.basis();
    if !basis.is_piecewise() || q.basis() != basis {
        return Err(msgate_core::Error::Unsupported("pulse CSV needs two pulses on one piecewise basis").into());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for l in 0..basis.len() {
        let (a, b) = basis.segment(l);
        w.serialize(PulseRow {
            t_start_s: a,
            t_end_s: b,
            omega_p_rad_per_s: p.coeffs()[l],
            omega_q_rad_per_s: q.coeffs()[l],
        })
        .map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

pub fn load_pulse_csv(path: &Path) -> Result<(Waveform, Waveform)> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let rows: Vec<PulseRow> = r.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(path))?;
    if rows.is_empty() {
        return Err(Error::schema(path, "rows", "no segments"));
    }
    if rows[0].t_start_s != 0.0 {
        return Err(Error::schema(path, "t_start_s", "first segment must start at 0"));
    }
    for (i, w) in rows.windows(2).enumerate() {
        if w[1].t_start_s != w[0].t_end_s {
            return Err(Error::schema(path, format!("row {}", i + 2), "segments are not contiguous"));
        }
    }
    let tau = rows[rows.len() - 1].t_end_s;
    let basis = Basis::piecewise(rows.len(), tau)?;
    for (l, row) in rows.iter().enumerate() {
        let (a, b) = basis.segment(l);
        if (a - row.t_start_s).abs() > 1e-12 * tau || (b - row.t_end_s).abs() > 1e-12 * tau {
            return Err(Error::schema(path, format!("row {}", l + 1), "segments must be uniform"));
        }
    }
    let p = Waveform::new(basis.clone(), rows.iter().map(|r| r.omega_p_rad_per_s).collect())?;
    let q = Waveform::new(basis, rows.iter().map(|r| r.omega_q_rad_per_s).collect())?;
    Ok((p, q))
}

/// `t_s,mode_index,re_alpha,im_alpha`, grouped by mode.
pub fn save_trajectory_csv(sample: &TrajectorySample, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t_s", "mode_index", "re_alpha", "im_alpha"]).map_err(csv_err(path))?;
    for (m, alpha) in sample.alpha.iter().enumerate() {
        for (t, a) in sample.times.iter().zip(alpha) {
            w.write_record([fmt_f64(*t), m.to_string(), fmt_f64(a.re), fmt_f64(a.im)])
                .map_err(csv_err(path))?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_text(path, &String::from_utf8_lossy(&bytes))
}

/// Shortest text that parses back to the same bits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisFile {
    pub version: u32,
    pub method: String,
    pub mu_rad_per_s: f64,
    pub theta_target: f64,
    pub theta_achieved: f64,
    pub lambda_min: f64,
    pub predicted_estimate: f64,
    pub rabi_l2: f64,
    pub rabi_max: f64,
    pub constraint_residual: f64,
    pub sign_flipped: bool,
    pub conventional_construction: String,
    pub c_p: Vec<f64>,
    pub c_q: Vec<f64>,
    pub warnings: Vec<String>,
}

impl From<&SynthesisResult> for SynthesisFile {
    fn from(r: &SynthesisResult) -> Self {
        SynthesisFile {
            version: FORMAT_VERSION,
            method: r.method.name().to_string(),
            mu_rad_per_s: r.mu,
            theta_target: r.theta_target,
            theta_achieved: r.theta_achieved,
            lambda_min: r.lambda_min,
            predicted_estimate: r.predicted_estimate,
            rabi_l2: r.rabi_l2,
            rabi_max: r.rabi_max,
            constraint_residual: r.constraint_residual,
            sign_flipped: r.flipped,
            conventional_construction: CONVENTIONAL_CONSTRUCTION.to_string(),
            c_p: r.c_p.clone(),
            c_q: r.c_q.clone(),
            warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimReportFile {
    pub version: u32,
    pub infidelity: f64,
    pub fidelity_definition: String,
    pub trace_residual: f64,
    pub min_eig: f64,
    pub leakage: f64,
    pub steps: usize,
    pub n_cut: usize,
    pub dt_s: f64,
    pub initial_spin: String,
    pub initial_phonon: String,
    pub warnings: Vec<String>,
}

impl From<&SimReport> for SimReportFile {
    fn from(r: &SimReport) -> Self {
        SimReportFile {
            version: FORMAT_VERSION,
            infidelity: r.infidelity,
            fidelity_definition: r.fidelity_definition.to_string(),
            trace_residual: r.trace_residual,
            min_eig: r.min_eig,
            leakage: r.leakage,
            steps: r.steps,
            n_cut: r.n_cut,
            dt_s: r.dt,
            initial_spin: r.initial_spin.to_string(),
            initial_phonon: r.initial_phonon.to_string(),
            warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
        }
    }
}

/// Append one line and flush; used for checkpoints.
pub(crate) fn append_line(file: &mut fs::File, line: &str, path: &Path) -> Result<()> {
    file.write_all(line.as_bytes())
        .and_then(|_| file.write_all(b"\n"))
        .and_then(|_| file.flush())
        .map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_text(path, &String::from_utf8_lossy(bytes))
}
