//! Acceptance run. Prints one PASS/FAIL line per criterion and a tally.
//!
//! Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test -p msgate --test acceptance -- 4 9`.
//!
//! A failing criterion is reported, not turned into a process failure:
//! some criteria are measurements of the physics, and the run is meant to
//! record them whichever way they fall.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};
use std::time::Instant;

use msgate::harness::{run_gamma_robustness, run_sweep, summarize, Padding, RobustnessPlan, ScenarioKind, SweepPlan};
use msgate::harness::mu_near_com;
use msgate_core::assembly::{assemble, trajectory, uniform_grid, AssembledProblem, GateSpec, HeatingMode};
use msgate_core::basis::{Basis, Waveform};
use msgate_core::lindblad::{
    build_generators, evolve, ms_target, pure_state_fidelity, simulate_report, InitialSpin, SimConfig, StepSize,
};
use msgate_core::modes::{build_mode_spec, chain_modes, ChainConfig, Mode, ModeSpec};
use msgate_core::quad::quad_oracle_split;
use msgate_core::synth::{kernel_from_rows, positive_extract, single_mode_fourier_compare, synthesize, Method};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn threads() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Chain spec with μ a small offset above the COM mode.
fn chain_spec(n: usize, gamma: f64) -> ModeSpec {
    let g = vec![gamma; n];
    let mut s = build_mode_spec(&ChainConfig::with_ions(n), 0.0, 150e-6, &g, &g).unwrap();
    s.mu = mu_near_com(&s, 2.0 * PI * 1e3);
    s
}

/// Random environment: orthonormal participation vectors from the QR
/// factor of a Gaussian matrix, frequencies and rates drawn freely.
fn random_spec(rng: &mut ChaCha8Rng, n: usize) -> ModeSpec {
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let mu = 2.0 * PI * rng.gen_range(1.0e6..3.0e6);
    let modes = (0..n)
        .map(|m| Mode {
            omega: mu + 2.0 * PI * rng.gen_range(-80e3..80e3),
            eta: rng.gen_range(0.02..0.15),
            vector: q.column(m).iter().copied().collect(),
            gamma_up: rng.gen_range(0.0..500.0),
            gamma_down: rng.gen_range(0.0..500.0),
        })
        .collect();
    ModeSpec {
        num_ions: n,
        mu,
        tau: rng.gen_range(50e-6..250e-6),
        modes,
    }
}

fn random_gate(rng: &mut ChaCha8Rng, n: usize) -> GateSpec {
    let p = rng.gen_range(0..n);
    let q = (p + rng.gen_range(1..n)) % n;
    GateSpec::new(p, q, rng.gen_range(0.1..1.5)).unwrap()
}

fn random_pulse(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1e6..1e6)).collect()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let spec = random_spec(&mut rng, n);
        let len = rng.gen_range(4..=30);
        let basis = Basis::piecewise(len, spec.tau).unwrap();
        let prob = assemble(&spec, &basis, &random_gate(&mut rng, n)).unwrap();
        let cp = random_pulse(&mut rng, len);
        let cq = random_pulse(&mut rng, len);
        let t = prob.heating_terms(&cp, &cq);
        let lhs = t.pq.norm() + t.qp.norm();
        let rhs = t.pp.abs() + t.qq.abs();
        let scale = lhs.max(rhs);
        worst = worst.max((lhs - rhs) / scale);
        if lhs > rhs + 1e-12 * scale {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("1000 draws, {failures} violations, max (|Epq|+|Eqp|-Epp-Eqq)/scale = {worst:.3e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_angle = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut worst_extract = 0.0f64;
    let mut errors = Vec::new();
    for trial in 0..100 {
        let n = 2 + trial % 7;
        let config = ChainConfig::with_ions(n);
        let set = chain_modes(&config).unwrap();
        let lo = set.frequencies.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = set.frequencies.iter().cloned().fold(0.0, f64::max);
        let pad = (hi - lo).max(2.0 * PI * 1e4);
        let up: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..300.0)).collect();
        let down: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..300.0)).collect();
        let mu = rng.gen_range(lo - pad..hi + pad);
        let spec = build_mode_spec(&config, mu, rng.gen_range(80e-6..250e-6), &up, &down).unwrap();
        let basis = Basis::piecewise(6 * n + 20, spec.tau).unwrap();
        let mut gate = random_gate(&mut rng, n);
        if rng.gen_bool(0.2) {
            gate.theta_target = -gate.theta_target;
        }
        let prob = assemble(&spec, &basis, &gate).unwrap();
        let kernel = kernel_from_rows(&prob.stacked_constraints()).unwrap();
        let ext = positive_extract(&kernel, &prob.m).unwrap();
        let d = (&ext.p * &prob.m * &ext.p * &ext.f - &ext.m_tilde).norm() / prob.m.norm();
        worst_extract = worst_extract.max(d);
        for method in Method::ALL {
            match synthesize(&prob, method) {
                Ok(r) => {
                    let theta = gate.theta_target;
                    worst_angle = worst_angle.max((r.theta_achieved - theta).abs() / theta.abs());
                    worst_residual = worst_residual.max(r.constraint_residual);
                }
                Err(e) => errors.push(format!("trial {trial} {}: {e}", method.name())),
            }
        }
    }
    let pass = errors.is_empty() && worst_angle <= 1e-8 && worst_residual <= 1e-9 && worst_extract <= 1e-10;
    outcome(
        pass,
        format!(
            "100 problems x 3 methods, max rel angle err {worst_angle:.2e}, max residual {worst_residual:.2e}, \
             max |PMPF-M~|/|M| {worst_extract:.2e}, {} errors",
            errors.len()
        ),
    )
}

fn indicator(basis: &Basis, k: usize, t: f64) -> f64 {
    let (a, b) = basis.segment(k);
    let last = k + 1 == basis.len();
    if t >= a && (t < b || (last && t <= b)) {
        1.0
    } else {
        0.0
    }
}

fn rel_err_c(closed: &DMatrix<C64>, oracle: &DMatrix<C64>) -> f64 {
    let scale = closed.iter().map(|z| z.norm()).fold(0.0, f64::max);
    closed.iter().zip(oracle.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

fn criterion_3() -> Outcome {
    let mut spec = chain_spec(2, 0.0);
    spec.mu = spec.modes[spec.com_index()].omega + 2.0 * PI * 17.3e3;
    spec.modes[0].gamma_up = 140.0;
    spec.modes[0].gamma_down = 60.0;
    spec.modes[1].gamma_up = 90.0;
    spec.modes[1].gamma_down = 210.0;
    let len = 6;
    let basis = Basis::piecewise(len, spec.tau).unwrap();
    let gate = GateSpec::new(0, 1, FRAC_PI_4).unwrap();
    let prob = assemble(&spec, &basis, &gate).unwrap();
    let edges = basis.edges();
    let tau = spec.tau;
    let quad = |f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64| quad_oracle_split(f, a, b, &edges, tol).unwrap();

    let nm = spec.num_modes();
    let mut a = DMatrix::zeros(nm, len);
    let mut ad = DMatrix::zeros(nm, len);
    let mut m = DMatrix::<f64>::zeros(len, len);
    let mut c = [DMatrix::zeros(len, len), DMatrix::zeros(len, len), DMatrix::zeros(len, len)];
    let pairs = [(gate.p, gate.p), (gate.q, gate.q), (gate.p, gate.q)];
    for (idx, mode) in spec.modes.iter().enumerate() {
        let delta = spec.detuning(idx);
        for k in 0..len {
            a[(idx, k)] = quad(&|t| C64::new(0.0, delta * t).exp() * indicator(&basis, k, t), 0.0, tau, 1e-16);
            ad[(idx, k)] = quad(&|t| C64::new(0.0, delta * t).exp() * t * indicator(&basis, k, t), 0.0, tau, 1e-20);
        }
        let partial = |k: usize, t: f64| quad(&|s| C64::new(0.0, delta * s).exp() * indicator(&basis, k, s), 0.0, t, 1e-16);
        let half = |x: usize, y: usize| {
            quad(
                &|t1| {
                    let fx = indicator(&basis, x, t1);
                    if fx == 0.0 {
                        return C64::new(0.0, 0.0);
                    }
                    quad(&|t2| C64::new((delta * (t1 - t2)).sin() * indicator(&basis, y, t2), 0.0), 0.0, t1, 1e-16)
                },
                0.0,
                tau,
                1e-18,
            )
            .re
        };
        let w = 0.25 * mode.eta * mode.eta * mode.vector[gate.p] * mode.vector[gate.q];
        let g = mode.gamma_up + mode.gamma_down;
        for k in 0..len {
            for l in k..len {
                let mv = w * (half(k, l) + half(l, k));
                m[(k, l)] += mv;
                if l != k {
                    m[(l, k)] += mv;
                }
                let ov = quad(&|t| partial(k, t).conj() * partial(l, t), 0.0, tau, 1e-24);
                for (cm, &(j1, j2)) in c.iter_mut().zip(&pairs) {
                    let wc = 0.25 * g * mode.eta * mode.eta * mode.vector[j1] * mode.vector[j2];
                    cm[(k, l)] += ov * wc;
                    if l != k {
                        cm[(l, k)] += ov.conj() * wc;
                    }
                }
            }
        }
    }
    let errs = [
        ("A", rel_err_c(&prob.a, &a)),
        ("Adiff", rel_err_c(&prob.a_diff, &ad)),
        (
            "M",
            (&prob.m - &m).abs().max() / prob.m.abs().max(),
        ),
        ("Hpp", rel_err_c(&prob.c_pp, &c[0])),
        ("Hqq", rel_err_c(&prob.c_qq, &c[1])),
        ("Hpq", rel_err_c(&prob.c_pq, &c[2])),
    ];
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let list: Vec<String> = errs.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(
        worst <= 1e-8,
        format!("2 ions, L=6, max entry error / max entry: {}", list.join(", ")),
    )
}

fn criterion_4() -> Outcome {
    let delta = 2.0 * PI * 1e4;
    let mu = 1.0e7;
    // one mode only, so nothing else contributes to the angle or heating
    let single = ModeSpec {
        num_ions: 2,
        mu,
        tau: 1e-4,
        modes: vec![Mode {
            omega: mu + delta,
            eta: 0.1,
            vector: vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
            gamma_up: 100.0,
            gamma_down: 100.0,
        }],
    };
    let basis = Basis::piecewise(1, single.tau).unwrap();
    let gate = GateSpec::new(0, 1, 0.1).unwrap();
    let prob = assemble(&single, &basis, &gate).unwrap();
    let omega = 2.0 * PI * 5e4;
    let c = [omega];
    let theta = prob.rotation_angle(&c, &c);
    let t = prob.heating_terms(&c, &c);
    let full = prob.heating_error(&c, &c, HeatingMode::Full);
    let diag = prob.heating_error(&c, &c, HeatingMode::Diagonal);
    let w = Waveform::new(basis, vec![omega]).unwrap();
    let alpha = trajectory(&w, 0, &single, &[0.0, single.tau]).unwrap();
    let alpha_end = alpha.alpha[0][1].norm();

    let theta_ref = PI / 8.0;
    let e_ref = 1.25e-3;
    let rel = |x: f64, r: f64| (x - r).abs() / r;
    let checks = [
        rel(theta, theta_ref),
        rel(t.pp, e_ref),
        rel(t.qq, e_ref),
        rel(t.pq.re, e_ref) + t.pq.im.abs() / e_ref,
        rel(t.qp.re, e_ref) + t.qp.im.abs() / e_ref,
        rel(full, 5e-3),
        rel(diag, 2.5e-3),
    ];
    let worst = checks.iter().cloned().fold(0.0, f64::max);
    // α(τ) closes to zero; compare with the peak |α| = ηbΩ/Δ
    let alpha_scale = 0.1 * FRAC_1_SQRT_2 * omega / delta;
    let closure = alpha_end / alpha_scale;
    outcome(
        worst <= 1e-9 && closure <= 1e-9,
        format!("Theta = {theta:.9} rad, E_pp = {:.9e}, worst rel err {worst:.1e}, |alpha(tau)|/peak {closure:.1e}", t.pp),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let spec = chain_spec(2, 100.0);
    let gate = GateSpec::new(0, 1, FRAC_PI_4).unwrap();
    let basis = Basis::piecewise(32, spec.tau).unwrap();
    let prob = assemble(&spec, &basis, &gate).unwrap();
    let r = synthesize(&prob, Method::HeatingOptimal).unwrap();
    let wp = Waveform::new(basis.clone(), r.c_p.clone()).unwrap();
    let wq = Waveform::new(basis, r.c_q.clone()).unwrap();
    let custom = InitialSpin::Custom([
        C64::new(0.6, 0.0),
        C64::new(0.0, 0.48),
        C64::new(0.36, -0.2),
        C64::new(0.1, 0.48),
    ]);
    let mut worst_inf = 0.0f64;
    let mut worst_trace = 0.0f64;
    let noiseless = spec.with_gammas(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
    for spin in [InitialSpin::ZeroZero, custom] {
        let sim = SimConfig {
            n_cut: 10,
            initial_spin: spin,
            ..Default::default()
        };
        let gens = build_generators(&noiseless, (&wp, &wq), &gate, &sim).unwrap();
        let ev = evolve(&gens, true).unwrap();
        let target = ms_target(r.theta_achieved, &spin.amplitudes().unwrap());
        worst_inf = worst_inf.max(1.0 - pure_state_fidelity(&target, &ev.spin));
        worst_trace = worst_trace.max(ev.trace_residual);
    }
    let spin_at = |divisor: f64| {
        let sim = SimConfig {
            n_cut: 10,
            dt: StepSize::Auto { divisor },
            ..Default::default()
        };
        simulate_report(&spec, (&wp, &wq), &gate, &sim).unwrap()
    };
    let coarse = spin_at(40.0);
    let fine = spin_at(80.0);
    worst_trace = worst_trace.max(coarse.trace_residual).max(fine.trace_residual);
    let halving = (coarse.noisy_spin - fine.noisy_spin)
        .iter()
        .fold(0.0f64, |a, z| a.max(z.norm()))
        .max((coarse.infidelity - fine.infidelity).abs());
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst_inf <= 1e-6 && worst_trace <= 1e-8 && halving <= 1e-8 && secs / 6.0 < 300.0,
        format!(
            "N=2, n_cut=10: Gamma=0 1-F = {worst_inf:.2e}, trace residual {worst_trace:.1e}, \
             step halving diff {halving:.1e}, {} steps, {secs:.0} s for 6 runs",
            coarse.steps
        ),
    )
}

struct SweepData {
    n: usize,
    plan: SweepPlan,
    rows: Vec<msgate::harness::SweepRow>,
    seconds: f64,
}

fn sweep(n: usize, n_cut: usize, simulate: bool) -> SweepData {
    let spec = chain_spec(n, 100.0);
    let sim = SimConfig {
        n_cut,
        dt: StepSize::Auto { divisor: 20.0 },
        ..Default::default()
    };
    let plan = SweepPlan::new(
        spec,
        Basis::default_segments(n),
        GateSpec::new(0, 1, FRAC_PI_4).unwrap(),
        20,
        Padding::Fraction(1.0),
        Method::ALL.to_vec(),
        Some(simulate),
        sim,
        None,
    )
    .unwrap();
    let start = Instant::now();
    let rows = run_sweep(&plan, threads(), None).unwrap();
    SweepData {
        n,
        plan,
        rows,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn criterion_6(sweeps: &[&SweepData]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for s in sweeps {
        for (k, method) in s.plan.methods.iter().enumerate() {
            if *method == Method::Conventional {
                continue;
            }
            let mut ratios: Vec<f64> = s
                .rows
                .iter()
                .map(|r| &r.cells[k])
                .filter(|c| c.error.is_none() && c.leakage.is_some_and(|l| l <= s.plan.sim.leakage_threshold))
                .filter_map(|c| Some(c.predicted_estimate? / c.infidelity?))
                .collect();
            ratios.sort_by(|a, b| a.total_cmp(b));
            let inside = ratios.iter().filter(|r| (2.0..=8.0).contains(*r)).count();
            let frac = inside as f64 / ratios.len().max(1) as f64;
            pass &= !ratios.is_empty() && frac >= 0.9;
            let median = ratios.get(ratios.len() / 2).copied().unwrap_or(f64::NAN);
            parts.push(format!(
                "N={} {}: {inside}/{} in [2,8], median ratio {median:.3}",
                s.n,
                method.name(),
                ratios.len()
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7(s: &SweepData) -> Outcome {
    let summary = summarize(&s.plan, &s.rows);
    let mean = |m: Method| {
        summary
            .methods
            .iter()
            .find(|x| x.method == m.name())
            .and_then(|x| x.mean_infidelity)
            .unwrap_or(f64::NAN)
    };
    let (ho, mr, cv) = (mean(Method::HeatingOptimal), mean(Method::MinRabi), mean(Method::Conventional));
    let failures: usize = summary.methods.iter().map(|m| m.failures).sum();
    let start = Instant::now();
    let mut estimate_only = s.plan.clone();
    estimate_only.simulate = false;
    run_sweep(&estimate_only, threads(), None).unwrap();
    let est_secs = start.elapsed().as_secs_f64();
    outcome(
        ho < mr && mr < cv && 3.0 * ho <= cv && est_secs <= 60.0,
        format!(
            "N=3, {} points, n_cut={}: mean infidelity heating_optimal {ho:.3e}, min_rabi {mr:.3e}, \
             conventional {cv:.3e} (ratio {:.2}), {failures} failed cells, simulated in {:.0} s, \
             estimate-only rerun {est_secs:.1} s",
            s.rows.len(),
            s.plan.sim.n_cut,
            cv / ho,
            s.seconds
        ),
    )
}

fn criterion_8() -> Outcome {
    let spec = chain_spec(2, 100.0);
    let gammas = vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 75.0];
    let plan = RobustnessPlan {
        segments: Basis::default_segments(2),
        spec,
        gate: GateSpec::new(0, 1, FRAC_PI_4).unwrap(),
        method: Method::HeatingOptimal,
        design_gamma: 100.0,
        gamma_values: gammas.clone(),
        scenarios: vec![ScenarioKind::AllGamma, ScenarioKind::AllButCom, ScenarioKind::AllButBm],
        fixed_gamma: 100.0,
        sim: SimConfig {
            dt: StepSize::Auto { divisor: 20.0 },
            ..Default::default()
        },
    };
    let table = run_gamma_robustness(&plan, threads()).unwrap();
    let r2: Vec<f64> = table
        .fits
        .iter()
        .map(|f| f.fit.map(|x| x.r_squared).unwrap_or(f64::NAN))
        .collect();
    let at = |s: ScenarioKind, g: f64| {
        table
            .cells
            .iter()
            .find(|c| c.scenario == s && c.gamma == g)
            .and_then(|c| c.infidelity)
            .unwrap_or(f64::NAN)
    };
    let ordered = gammas
        .iter()
        .filter(|&&g| at(ScenarioKind::AllButBm, g) > at(ScenarioKind::AllButCom, g))
        .count();
    let r2_ok = r2.iter().all(|&x| x >= 0.99);
    outcome(
        r2_ok && ordered == gammas.len(),
        format!(
            "N=2, Gamma 10..75: R^2 all/COM fixed/BM fixed = {:.5}/{:.5}/{:.5}; at Gamma=50 infidelity \
             BM fixed {:.4e} vs COM fixed {:.4e} (all Gamma {:.4e}); BM > COM at {ordered}/{} rates",
            r2[0],
            r2[1],
            r2[2],
            at(ScenarioKind::AllButBm, 50.0),
            at(ScenarioKind::AllButCom, 50.0),
            at(ScenarioKind::AllGamma, 50.0),
            gammas.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut pass = true;
    let mut worst_gap = 0.0f64;
    let mut worst_heat = f64::NEG_INFINITY;
    for len in 2..=12 {
        let cmp = single_mode_fourier_compare(len, FRAC_PI_4, 500.0, 2.0 * PI * 0.05e6).unwrap();
        let prior = cmp.prior.as_ref().unwrap();
        let excess = (cmp.ours.heating - prior.heating) / prior.heating;
        worst_heat = worst_heat.max(excess);
        let gap = (cmp.ours.improvement - prior.improvement).abs() / prior.improvement;
        worst_gap = worst_gap.max(gap);
        pass &= cmp.ours.heating <= prior.heating * (1.0 + 1e-12) && gap <= 0.1;
    }
    outcome(
        pass,
        format!("L=2..12: max (ours-prior)/prior heating {worst_heat:.2e}, max improvement-rate gap {worst_gap:.3}"),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=5);
        let spec = random_spec(&mut rng, n);
        let len = rng.gen_range(4..=24);
        let basis = Basis::piecewise(len, spec.tau).unwrap();
        let gate = random_gate(&mut rng, n);
        let prob: AssembledProblem = assemble(&spec, &basis, &gate).unwrap();
        let cp = random_pulse(&mut rng, len);
        let cq = random_pulse(&mut rng, len);
        let s: f64 = rng.gen_range(-3.0..3.0);
        let scp: Vec<f64> = cp.iter().map(|x| s * x).collect();
        let scq: Vec<f64> = cq.iter().map(|x| s * x).collect();
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        let th = prob.rotation_angle(&cp, &cq);
        worst = worst.max(rel(prob.rotation_angle(&scp, &scq), s * s * th));
        for mode in [HeatingMode::Full, HeatingMode::Diagonal] {
            let e = prob.heating_error(&cp, &cq, mode);
            worst = worst.max(rel(prob.heating_error(&scp, &scq, mode), s * s * e));
        }
        let grid = uniform_grid(spec.tau, 16);
        let w = Waveform::new(basis.clone(), cp).unwrap();
        let sw = Waveform::new(basis, scp).unwrap();
        let a = trajectory(&w, gate.p, &spec, &grid).unwrap();
        let sa = trajectory(&sw, gate.p, &spec, &grid).unwrap();
        let peak = a.alpha.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        for (ra, rs) in a.alpha.iter().zip(&sa.alpha) {
            for (x, y) in ra.iter().zip(rs) {
                worst = worst.max((x * s - y).norm() / (s.abs() * peak));
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("100 draws: worst relative deviation from s^2 / s scaling {worst:.2e}"),
    )
}

fn main() {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |k: usize| wanted.is_empty() || wanted.contains(&k);
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |k: usize, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        if run(k) {
            let start = Instant::now();
            let o = f();
            let secs = start.elapsed().as_secs_f64();
            println!(
                "{} criterion {k:>2} ({name}, {secs:.1} s): {}",
                if o.pass { "PASS" } else { "FAIL" },
                o.detail
            );
            results.push((k, name, o, secs));
        }
    };
    record(1, "cross-term bound", &mut criterion_1);
    record(2, "exact synthesis", &mut criterion_2);
    record(3, "assembly oracle", &mut criterion_3);
    record(4, "closed-form physics", &mut criterion_4);
    record(5, "lindblad sanity", &mut criterion_5);
    let mut n3 = None;
    if run(6) || run(7) {
        n3 = Some(sweep(3, 8, true));
    }
    if run(6) {
        let n2 = sweep(2, 8, true);
        let n3 = n3.as_ref().unwrap();
        record(6, "estimate vs simulation", &mut || criterion_6(&[&n2, n3]));
    }
    if let Some(n3) = &n3 {
        record(7, "improvement at desk scale", &mut || criterion_7(n3));
    }
    record(8, "linearity in heating rate", &mut criterion_8);
    record(9, "fourier reduction", &mut criterion_9);
    record(10, "scaling invariants", &mut criterion_10);

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
}
