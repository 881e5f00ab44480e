//! Detuning sweeps and heating-rate robustness tables.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Mutex;

use msgate_core::assembly::{assemble, GateSpec};
use msgate_core::basis::{Basis, Waveform};
use msgate_core::lindblad::{simulate_report, SimConfig};
use msgate_core::modes::ModeSpec;
use msgate_core::synth::{synthesize, Method, SynthesisResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, fmt_f64};

/// Relative angle error a harness re-check tolerates.
pub const ANGLE_TOL: f64 = 1e-8;
/// Constraint residual a harness re-check tolerates.
pub const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    /// Multiple of the mean spacing between adjacent modes.
    Fraction(f64),
    /// Fixed width in rad/s.
    Absolute(f64),
}

/// Laser detunings spread over the N+1 intervals around and between the
/// mode frequencies, `points` interior points in each.
pub fn detuning_grid(freqs: &[f64], points: usize, padding: Padding) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Config("points per interval must be at least 1".into()));
    }
    if freqs.is_empty() || freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::Config("mode frequencies must be finite and non-empty".into()));
    }
    let mut f = freqs.to_vec();
    f.sort_by(|a, b| a.total_cmp(b));
    let pad = match padding {
        Padding::Absolute(w) => w,
        Padding::Fraction(x) => {
            if f.len() < 2 {
                return Err(Error::Config(
                    "a single mode has no spacing; give the padding in rad/s".into(),
                ));
            }
            x * (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64
        }
    };
    if !(pad.is_finite() && pad > 0.0) {
        return Err(Error::Config("padding must be positive".into()));
    }
    let mut edges = Vec::with_capacity(f.len() + 2);
    edges.push(f[0] - pad);
    edges.extend_from_slice(&f);
    edges.push(f[f.len() - 1] + pad);
    let mut grid = Vec::with_capacity(points * (f.len() + 1));
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            return Err(Error::Config("mode frequencies must be distinct".into()));
        }
        let h = (b - a) / (points + 1) as f64;
        for k in 1..=points {
            let mut mu = a + h * k as f64;
            if f.contains(&mu) {
                mu += 1e-6 * (b - a);
            }
            grid.push(mu);
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    AllGamma,
    AllButCom,
    AllButBm,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::AllGamma => "all_gamma",
            ScenarioKind::AllButCom => "all_but_com",
            ScenarioKind::AllButBm => "all_but_bm",
        }
    }

    pub fn with_rates(self, gamma: f64, fixed: f64) -> GammaScenario {
        match self {
            ScenarioKind::AllGamma => GammaScenario::AllGamma { gamma },
            ScenarioKind::AllButCom => GammaScenario::AllButCom { gamma, gamma_com: fixed },
            ScenarioKind::AllButBm => GammaScenario::AllButBm { gamma, gamma_bm: fixed },
        }
    }
}

/// Heating rates per mode, applied equally to Γ↑ and Γ↓.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GammaScenario {
    AllGamma { gamma: f64 },
    AllButCom { gamma: f64, gamma_com: f64 },
    AllButBm { gamma: f64, gamma_bm: f64 },
}

impl GammaScenario {
    pub fn rates(&self, spec: &ModeSpec) -> Result<Vec<f64>> {
        let n = spec.num_modes();
        Ok(match *self {
            GammaScenario::AllGamma { gamma } => vec![gamma; n],
            GammaScenario::AllButCom { gamma, gamma_com } => {
                let mut r = vec![gamma; n];
                r[spec.com_index()] = gamma_com;
                r
            }
            GammaScenario::AllButBm { gamma, gamma_bm } => {
                let bm = spec
                    .breathing_index()
                    .ok_or_else(|| Error::Config("a single mode has no breathing mode".into()))?;
                let mut r = vec![gamma; n];
                r[bm] = gamma_bm;
                r
            }
        })
    }

    pub fn apply(&self, spec: &ModeSpec) -> Result<ModeSpec> {
        let r = self.rates(spec)?;
        Ok(spec.with_gammas(&r, &r)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    /// Environment; `mu` is replaced at every grid point.
    pub spec: ModeSpec,
    pub segments: usize,
    pub gate: GateSpec,
    pub points_per_interval: usize,
    pub padding: Padding,
    pub mu_list: Vec<f64>,
    pub methods: Vec<Method>,
    pub simulate: bool,
    pub sim: SimConfig,
    pub scenario: Option<GammaScenario>,
}

impl SweepPlan {
    /// Plan over the grid for `spec`'s modes. Simulation defaults to on for
    /// up to three ions.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: ModeSpec,
        segments: usize,
        gate: GateSpec,
        points_per_interval: usize,
        padding: Padding,
        methods: Vec<Method>,
        simulate: Option<bool>,
        sim: SimConfig,
        scenario: Option<GammaScenario>,
    ) -> Result<Self> {
        gate.check_against(spec.num_ions)?;
        if methods.is_empty() {
            return Err(Error::Config("sweep needs at least one method".into()));
        }
        let freqs: Vec<f64> = spec.modes.iter().map(|m| m.omega).collect();
        let mu_list = detuning_grid(&freqs, points_per_interval, padding)?;
        let simulate = simulate.unwrap_or(spec.num_ions <= 3);
        if simulate {
            sim.validate(spec.num_modes())?;
        }
        let spec = match &scenario {
            Some(s) => s.apply(&spec)?,
            None => spec,
        };
        Ok(SweepPlan {
            spec,
            segments,
            gate,
            points_per_interval,
            padding,
            mu_list,
            methods,
            simulate,
            sim,
            scenario,
        })
    }

    /// Identifies the plan in checkpoint headers.
    pub fn fingerprint(&self) -> String {
        format!("{self:?}")
    }
}

/// One method at one grid point. Missing values mean the step failed or
/// was not run; `error` says which.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepCell {
    pub theta_achieved: Option<f64>,
    pub predicted_estimate: Option<f64>,
    pub rabi_l2: Option<f64>,
    pub rabi_max: Option<f64>,
    pub constraint_residual: Option<f64>,
    pub infidelity: Option<f64>,
    pub leakage: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub mu: f64,
    /// Same order as the plan's methods.
    pub cells: Vec<SweepCell>,
}

fn synthesis_cell(r: &SynthesisResult, theta: f64) -> SweepCell {
    let mut cell = SweepCell {
        theta_achieved: Some(r.theta_achieved),
        predicted_estimate: Some(r.predicted_estimate),
        rabi_l2: Some(r.rabi_l2),
        rabi_max: Some(r.rabi_max),
        constraint_residual: Some(r.constraint_residual),
        ..Default::default()
    };
    let angle_err = (r.theta_achieved - theta).abs() / theta.abs();
    if angle_err > ANGLE_TOL {
        cell.error = Some(format!("angle off target by {angle_err:e} relative"));
    } else if r.constraint_residual > RESIDUAL_TOL {
        cell.error = Some(format!("constraint residual {:e}", r.constraint_residual));
    }
    cell
}

fn run_point(plan: &SweepPlan, index: usize) -> SweepRow {
    let mu = plan.mu_list[index];
    let spec = plan.spec.with_mu(mu);
    let fail = |e: String| SweepCell {
        error: Some(e),
        ..Default::default()
    };
    let problem = Basis::piecewise(plan.segments, spec.tau).and_then(|b| assemble(&spec, &b, &plan.gate));
    let problem = match problem {
        Ok(p) => p,
        Err(e) => {
            return SweepRow {
                index,
                mu,
                cells: plan.methods.iter().map(|_| fail(e.to_string())).collect(),
            }
        }
    };
    let cells = plan
        .methods
        .iter()
        .map(|&method| {
            let r = match synthesize(&problem, method) {
                Ok(r) => r,
                Err(e) => return fail(e.to_string()),
            };
            let mut cell = synthesis_cell(&r, plan.gate.theta_target);
            if plan.simulate {
                let sim = Waveform::new(problem.basis.clone(), r.c_p.clone()).and_then(|p| {
                    let q = Waveform::new(problem.basis.clone(), r.c_q.clone())?;
                    simulate_report(&spec, (&p, &q), &plan.gate, &plan.sim)
                });
                match sim {
                    Ok(rep) => {
                        cell.infidelity = Some(rep.infidelity);
                        cell.leakage = Some(rep.leakage);
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
            }
            cell
        })
        .collect();
    SweepRow { index, mu, cells }
}

/// Open checkpoint file and its path.
type Checkpoint<'a> = (Mutex<fs::File>, &'a Path);

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    plan: String,
}

fn read_checkpoint(plan: &SweepPlan, path: &Path) -> Result<BTreeMap<usize, SweepRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut done = BTreeMap::new();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(path, e))?,
        None => return Ok(done),
    };
    let header: CheckpointHeader =
        serde_json::from_str(&header).map_err(|source| Error::Json { path: path.into(), source })?;
    if header.plan != plan.fingerprint() {
        return Err(Error::CheckpointMismatch { path: path.into() });
    }
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        // a torn final line from an interrupted write is recomputed
        let Ok(row) = serde_json::from_str::<SweepRow>(&line) else {
            continue;
        };
        if row.index < plan.mu_list.len() {
            done.insert(row.index, row);
        }
    }
    Ok(done)
}

/// Evaluate every grid point on `threads` workers. With a checkpoint path,
/// each finished row is appended to it and rows already present are not
/// recomputed, so an interrupted sweep picks up where it stopped.
pub fn run_sweep(plan: &SweepPlan, threads: usize, checkpoint: Option<&Path>) -> Result<Vec<SweepRow>> {
    let mut done = BTreeMap::new();
    let mut writer: Option<Checkpoint> = None;
    if let Some(path) = checkpoint {
        let fresh = !path.exists() || fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        if !fresh {
            done = read_checkpoint(plan, path)?;
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if fresh {
            let header = serde_json::to_string(&CheckpointHeader { plan: plan.fingerprint() })
                .map_err(|source| Error::Json { path: path.into(), source })?;
            io::append_line(&mut file, &header, path)?;
        }
        writer = Some((Mutex::new(file), path));
    }
    let todo: Vec<usize> = (0..plan.mu_list.len()).filter(|i| !done.contains_key(i)).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let fresh: Vec<Result<SweepRow>> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let row = run_point(plan, i);
                if let Some((file, path)) = &writer {
                    let line = serde_json::to_string(&row)
                        .map_err(|source| Error::Json { path: (*path).into(), source })?;
                    let mut f = file.lock().unwrap_or_else(|p| p.into_inner());
                    io::append_line(&mut f, &line, path)?;
                }
                Ok(row)
            })
            .collect()
    });
    for row in fresh {
        let row = row?;
        done.insert(row.index, row);
    }
    Ok(done.into_values().collect())
}

const CELL_FIELDS: [&str; 8] = [
    "theta_achieved",
    "predicted_estimate",
    "rabi_l2",
    "rabi_max",
    "constraint_residual",
    "infidelity",
    "leakage",
    "error",
];

fn sweep_header(methods: &[Method]) -> Vec<String> {
    let mut h = vec!["index".to_string(), "mu_rad_per_s".to_string()];
    for m in methods {
        for f in CELL_FIELDS {
            h.push(format!("{}_{f}", m.name()));
        }
    }
    h
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One line per grid point; empty fields mark missing values.
pub fn write_sweep_csv(rows: &[SweepRow], methods: &[Method], path: &Path) -> Result<()> {
    let err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(sweep_header(methods)).map_err(err)?;
    for row in rows {
        let mut rec = vec![row.index.to_string(), fmt_f64(row.mu)];
        for c in &row.cells {
            rec.extend([
                opt(c.theta_achieved),
                opt(c.predicted_estimate),
                opt(c.rabi_l2),
                opt(c.rabi_max),
                opt(c.constraint_residual),
                opt(c.infidelity),
                opt(c.leakage),
                c.error.clone().unwrap_or_default(),
            ]);
        }
        w.write_record(&rec).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    io::write_bytes(path, &bytes)
}

/// Inverse of [`write_sweep_csv`]; the methods are read off the header.
pub fn read_sweep_csv(path: &Path) -> Result<(Vec<Method>, Vec<SweepRow>)> {
    let err = |source| Error::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    let mut methods = Vec::new();
    for name in header.iter().skip(2).step_by(CELL_FIELDS.len()) {
        let m = name
            .strip_suffix("_theta_achieved")
            .and_then(Method::from_name)
            .ok_or_else(|| Error::schema(path, name, "unexpected column"))?;
        methods.push(m);
    }
    if header.iter().collect::<Vec<_>>() != sweep_header(&methods) {
        return Err(Error::schema(path, "header", "columns do not match the sweep layout"));
    }
    let num = |s: &str, col: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| Error::schema(path, col, format!("not a number: {s}")))
    };
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(err)?;
        let index = rec[0].parse().map_err(|_| Error::schema(path, "index", "not an integer"))?;
        let mu = num(&rec[1], "mu_rad_per_s")?.ok_or_else(|| Error::schema(path, "mu_rad_per_s", "missing"))?;
        let mut cells = Vec::with_capacity(methods.len());
        for k in 0..methods.len() {
            let f = |j: usize| &rec[2 + k * CELL_FIELDS.len() + j];
            let col = |j: usize| header[2 + k * CELL_FIELDS.len() + j].to_string();
            cells.push(SweepCell {
                theta_achieved: num(f(0), &col(0))?,
                predicted_estimate: num(f(1), &col(1))?,
                rabi_l2: num(f(2), &col(2))?,
                rabi_max: num(f(3), &col(3))?,
                constraint_residual: num(f(4), &col(4))?,
                infidelity: num(f(5), &col(5))?,
                leakage: num(f(6), &col(6))?,
                error: Some(f(7).to_string()).filter(|s| !s.is_empty()),
            });
        }
        rows.push(SweepRow { index, mu, cells });
    }
    Ok((methods, rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub points: usize,
    pub failures: usize,
    /// Points whose top Fock level exceeded the leakage threshold.
    pub leaking: usize,
    pub mean_estimate: Option<f64>,
    pub median_estimate: Option<f64>,
    pub mean_infidelity: Option<f64>,
    pub median_infidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub version: u32,
    pub num_ions: usize,
    pub tau_s: f64,
    pub segments: usize,
    pub points_per_interval: usize,
    pub padding: Padding,
    pub simulate: bool,
    pub methods: Vec<MethodSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

pub fn summarize(plan: &SweepPlan, rows: &[SweepRow]) -> SweepSummary {
    let methods = plan
        .methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let cells: Vec<&SweepCell> = rows.iter().map(|r| &r.cells[k]).collect();
            let est: Vec<f64> = cells.iter().filter_map(|c| c.predicted_estimate).collect();
            let inf: Vec<f64> = cells.iter().filter_map(|c| c.infidelity).collect();
            MethodSummary {
                method: m.name().to_string(),
                points: cells.len(),
                failures: cells.iter().filter(|c| c.error.is_some()).count(),
                leaking: cells
                    .iter()
                    .filter(|c| c.leakage.is_some_and(|l| l > plan.sim.leakage_threshold))
                    .count(),
                mean_estimate: mean(&est),
                median_estimate: median(&est),
                mean_infidelity: mean(&inf),
                median_infidelity: median(&inf),
            }
        })
        .collect();
    SweepSummary {
        version: io::FORMAT_VERSION,
        num_ions: plan.spec.num_ions,
        tau_s: plan.spec.tau,
        segments: plan.segments,
        points_per_interval: plan.points_per_interval,
        padding: plan.padding,
        simulate: plan.simulate,
        methods,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessPlan {
    /// Environment with μ already set; its rates are replaced.
    pub spec: ModeSpec,
    pub segments: usize,
    pub gate: GateSpec,
    pub method: Method,
    pub design_gamma: f64,
    pub gamma_values: Vec<f64>,
    pub scenarios: Vec<ScenarioKind>,
    pub fixed_gamma: f64,
    pub sim: SimConfig,
}

/// μ placed `delta` above the COM mode.
pub fn mu_near_com(spec: &ModeSpec, delta: f64) -> f64 {
    spec.modes[spec.com_index()].omega + delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCell {
    pub scenario: ScenarioKind,
    pub gamma: f64,
    pub infidelity: Option<f64>,
    pub leakage: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFit {
    pub scenario: ScenarioKind,
    pub fit: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessTable {
    pub design: SynthesisResult,
    pub cells: Vec<RobustnessCell>,
    pub fits: Vec<ScenarioFit>,
}

/// Synthesise once at the design rate, then simulate that fixed pulse
/// under each scenario and rate.
pub fn run_gamma_robustness(plan: &RobustnessPlan, threads: usize) -> Result<RobustnessTable> {
    let design_spec = GammaScenario::AllGamma { gamma: plan.design_gamma }.apply(&plan.spec)?;
    let basis = Basis::piecewise(plan.segments, plan.spec.tau)?;
    let problem = assemble(&design_spec, &basis, &plan.gate)?;
    let design = synthesize(&problem, plan.method)?;
    let p = Waveform::new(basis.clone(), design.c_p.clone())?;
    let q = Waveform::new(basis, design.c_q.clone())?;
    let jobs: Vec<(ScenarioKind, f64)> = plan
        .scenarios
        .iter()
        .flat_map(|&s| plan.gamma_values.iter().map(move |&g| (s, g)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let cells: Vec<RobustnessCell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(scenario, gamma)| {
                let run = scenario
                    .with_rates(gamma, plan.fixed_gamma)
                    .apply(&plan.spec)
                    .and_then(|spec| Ok(simulate_report(&spec, (&p, &q), &plan.gate, &plan.sim)?));
                match run {
                    Ok(r) => RobustnessCell {
                        scenario,
                        gamma,
                        infidelity: Some(r.infidelity),
                        leakage: Some(r.leakage),
                        error: None,
                    },
                    Err(e) => RobustnessCell {
                        scenario,
                        gamma,
                        infidelity: None,
                        leakage: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect()
    });
    let fits = plan
        .scenarios
        .iter()
        .map(|&s| {
            let (x, y): (Vec<f64>, Vec<f64>) = cells
                .iter()
                .filter(|c| c.scenario == s)
                .filter_map(|c| c.infidelity.map(|i| (c.gamma, i)))
                .unzip();
            ScenarioFit {
                scenario: s,
                fit: linear_fit(&x, &y),
            }
        })
        .collect();
    Ok(RobustnessTable { design, cells, fits })
}

pub fn write_robustness_csv(cells: &[RobustnessCell], path: &Path) -> Result<()> {
    let err = |source| Error::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "gamma_per_s", "infidelity", "leakage", "error"])
        .map_err(err)?;
    for c in cells {
        w.write_record([
            c.scenario.name().to_string(),
            fmt_f64(c.gamma),
            opt(c.infidelity),
            opt(c.leakage),
            c.error.clone().unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    io::write_bytes(path, &bytes)
}
