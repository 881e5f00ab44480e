use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use msgate::config::{parse_method, RunConfig};
use msgate::harness::{self, RobustnessPlan, SweepPlan};
use msgate::io::{self, SimReportFile, SynthesisFile};
use msgate::Result;
use msgate_core::assembly::{assemble, trajectory, uniform_grid};
use msgate_core::basis::{Basis, Waveform};
use msgate_core::lindblad::simulate_report;
use msgate_core::synth::synthesize;

#[derive(Parser)]
#[command(name = "msgate", version, about = "Heating-aware amplitude-modulated two-ion gate pulses")]
struct Cli {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and robustness tables.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Accepted for randomized test drivers; the pipeline is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the chain and write its mode description.
    Modes,
    /// Synthesize one pulse pair at the configured detuning.
    Synth {
        /// Overrides the config's method.
        #[arg(long)]
        method: Option<String>,
    },
    /// Export the phase-space trajectory of every mode for one ion's pulse.
    Traj {
        /// Pulse CSV as written by `synth`.
        #[arg(long)]
        pulse: PathBuf,
        /// 1-based ion whose pulse drives the trajectory.
        #[arg(long, default_value_t = 1)]
        ion: usize,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
    },
    /// Simulate a pulse file and report the gate infidelity.
    Simulate {
        #[arg(long)]
        pulse: PathBuf,
    },
    /// Compare methods across the detuning grid.
    Sweep,
    /// Re-simulate one fixed pulse under modified heating rates.
    Robustness,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let out = cli.out.as_path();
    match &cli.command {
        Command::Modes => modes(&cfg, out),
        Command::Synth { method } => synth(&cfg, method.as_deref(), out),
        Command::Traj { pulse, ion, samples } => traj(&cfg, pulse, *ion, *samples, out),
        Command::Simulate { pulse } => simulate(&cfg, pulse, out),
        Command::Sweep => sweep(&cfg, cli.threads, out),
        Command::Robustness => robustness(&cfg, cli.threads, out),
    }
}

fn modes(cfg: &RunConfig, out: &Path) -> Result<()> {
    let spec = cfg.mode_spec()?;
    let com = spec.com_index();
    println!("{:>4} {:>14} {:>10}  b", "mode", "omega (Mrad/s)", "eta");
    for (m, mode) in spec.modes.iter().enumerate() {
        let b: Vec<String> = mode.vector.iter().map(|x| format!("{x:+.4}")).collect();
        let tag = if m == com { " (COM)" } else { "" };
        println!("{m:>4} {:>14.6} {:>10.6}  [{}]{tag}", mode.omega * 1e-6, mode.eta, b.join(", "));
    }
    println!("mu = {:.6} Mrad/s, tau = {} s", spec.mu * 1e-6, spec.tau);
    let path = out.join("modes.json");
    io::save_mode_spec(&spec, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn synth(cfg: &RunConfig, method: Option<&str>, out: &Path) -> Result<()> {
    let method = match method {
        Some(m) => parse_method(m)?,
        None => cfg.method()?,
    };
    let spec = cfg.mode_spec()?;
    let gate = cfg.gate()?;
    let basis = Basis::piecewise(cfg.segments(spec.num_ions), spec.tau)?;
    let problem = assemble(&spec, &basis, &gate)?;
    let r = synthesize(&problem, method)?;
    println!(
        "{}: theta {:.9} (target {:.9}), estimate {:.4e}, rabi max {:.4e} rad/s",
        method.name(),
        r.theta_achieved,
        r.theta_target,
        r.predicted_estimate,
        r.rabi_max
    );
    for w in &r.warnings {
        println!("warning: {w}");
    }
    let json = out.join(format!("synth_{}.json", method.name()));
    let csv = out.join(format!("pulse_{}.csv", method.name()));
    io::save_json(&SynthesisFile::from(&r), &json)?;
    io::save_pulse_csv(&Waveform::new(basis.clone(), r.c_p)?, &Waveform::new(basis, r.c_q)?, &csv)?;
    println!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn traj(cfg: &RunConfig, pulse: &Path, ion: usize, samples: usize, out: &Path) -> Result<()> {
    let spec = cfg.mode_spec()?;
    let gate = cfg.gate()?;
    let (p, q) = io::load_pulse_csv(pulse)?;
    let (wave, index) = if ion == gate.p + 1 {
        (&p, gate.p)
    } else if ion == gate.q + 1 {
        (&q, gate.q)
    } else {
        return Err(msgate::Error::Config(format!("ion {ion} is not driven by the gate")));
    };
    let grid = uniform_grid(wave.basis().tau(), samples.max(2));
    let sample = trajectory(wave, index, &spec, &grid)?;
    let path = out.join(format!("trajectory_ion{ion}.csv"));
    io::save_trajectory_csv(&sample, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn simulate(cfg: &RunConfig, pulse: &Path, out: &Path) -> Result<()> {
    let spec = cfg.mode_spec()?;
    let gate = cfg.gate()?;
    let sim = cfg.sim.to_sim_config()?;
    let (p, q) = io::load_pulse_csv(pulse)?;
    let start = Instant::now();
    let report = simulate_report(&spec, (&p, &q), &gate, &sim)?;
    println!(
        "infidelity {:.6e}, trace residual {:.2e}, leakage {:.2e}, {} steps in {:.1} s",
        report.infidelity,
        report.trace_residual,
        report.leakage,
        report.steps,
        start.elapsed().as_secs_f64()
    );
    for w in &report.warnings {
        println!("warning: {w}");
    }
    let path = out.join("sim_report.json");
    io::save_json(&SimReportFile::from(&report), &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn sweep(cfg: &RunConfig, threads: usize, out: &Path) -> Result<()> {
    let spec = cfg.mode_spec()?;
    let plan = SweepPlan::new(
        spec.clone(),
        cfg.segments(spec.num_ions),
        cfg.gate()?,
        cfg.sweep.points_per_interval,
        cfg.sweep.padding(),
        cfg.sweep_methods()?,
        cfg.sweep.simulate,
        cfg.sim.to_sim_config()?,
        cfg.sweep.scenario,
    )?;
    println!(
        "{} points, {} methods, simulate {}",
        plan.mu_list.len(),
        plan.methods.len(),
        if plan.simulate { "on" } else { "off" }
    );
    let start = Instant::now();
    let rows = harness::run_sweep(&plan, threads, Some(&out.join("sweep_checkpoint.jsonl")))?;
    let summary = harness::summarize(&plan, &rows);
    harness::write_sweep_csv(&rows, &plan.methods, &out.join("sweep.csv"))?;
    io::save_json(&summary, &out.join("sweep_summary.json"))?;
    for s in &summary.methods {
        println!(
            "{:>16}: mean estimate {}, mean infidelity {}, failures {}, leaking {}",
            s.method,
            sci(s.mean_estimate),
            sci(s.mean_infidelity),
            s.failures,
            s.leaking
        );
    }
    println!("done in {:.1} s, wrote {}", start.elapsed().as_secs_f64(), out.display());
    Ok(())
}

fn robustness(cfg: &RunConfig, threads: usize, out: &Path) -> Result<()> {
    let mut spec = cfg.mode_spec()?;
    if cfg.mu_rad_per_s.is_none() {
        spec.mu = harness::mu_near_com(&spec, cfg.robustness.delta_rad_per_s);
    }
    let r = &cfg.robustness;
    let plan = RobustnessPlan {
        segments: cfg.segments(spec.num_ions),
        spec,
        gate: cfg.gate()?,
        method: cfg.method()?,
        design_gamma: r.design_gamma,
        gamma_values: r.gamma_values.clone(),
        scenarios: r.scenarios.clone(),
        fixed_gamma: r.fixed_gamma,
        sim: cfg.sim.to_sim_config()?,
    };
    let table = harness::run_gamma_robustness(&plan, threads)?;
    harness::write_robustness_csv(&table.cells, &out.join("robustness.csv"))?;
    io::save_json(&table.fits, &out.join("robustness_fits.json"))?;
    for f in &table.fits {
        match f.fit {
            Some(fit) => println!(
                "{:>12}: slope {:.4e} per (1/s), R^2 {:.5}",
                f.scenario.name(),
                fit.slope,
                fit.r_squared
            ),
            None => println!("{:>12}: no fit", f.scenario.name()),
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn sci(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "n/a".into())
}
