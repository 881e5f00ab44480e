//! Master-equation engines: invariants and cross-checks.

use msgate_core::assembly::{assemble, GateSpec};
use msgate_core::basis::{Basis, Waveform};
use msgate_core::lindblad::{
    build_generators, evolve, ms_target, pure_state_fidelity, simulate_report, DenseOperators, Engine, InitialPhonon,
    InitialSpin, SimConfig, StepSize,
};
use msgate_core::modes::{build_mode_spec, ChainConfig, ModeSpec};
use msgate_core::synth::{synthesize, Method};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_ion(gamma: f64) -> ModeSpec {
    let config = ChainConfig::with_ions(2);
    let mu = 2.0 * std::f64::consts::PI * 2.17e6;
    build_mode_spec(&config, mu, 150e-6, &[gamma; 2], &[gamma; 2]).unwrap()
}

fn pulses(spec: &ModeSpec, method: Method) -> (Waveform, Waveform, f64) {
    let basis = Basis::piecewise(Basis::default_segments(spec.num_ions), spec.tau).unwrap();
    let gate = GateSpec::new(0, 1, std::f64::consts::FRAC_PI_4).unwrap();
    let r = synthesize(&assemble(spec, &basis, &gate).unwrap(), method).unwrap();
    (
        Waveform::new(basis.clone(), r.c_p).unwrap(),
        Waveform::new(basis, r.c_q).unwrap(),
        r.theta_achieved,
    )
}

fn gate() -> GateSpec {
    GateSpec::new(0, 1, std::f64::consts::FRAC_PI_4).unwrap()
}

#[test]
fn undriven_undamped_state_is_constant() {
    let spec = two_ion(0.0);
    let basis = Basis::piecewise(4, spec.tau).unwrap();
    let z = Waveform::zero(basis);
    for engine in [Engine::Factorized, Engine::Dense] {
        let sim = SimConfig {
            n_cut: 3,
            engine,
            initial_spin: InitialSpin::PlusPlus,
            ..Default::default()
        };
        let g = build_generators(&spec, (&z, &z), &gate(), &sim).unwrap();
        let out = evolve(&g, true).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((out.spin[(i, j)] - C64::new(0.25, 0.0)).norm() < 1e-15);
            }
        }
    }
}

#[test]
fn dense_hamiltonian_is_hermitian() {
    let spec = two_ion(0.0);
    let (wp, wq, _) = pulses(&spec, Method::MinRabi);
    let sim = SimConfig {
        n_cut: 4,
        ..Default::default()
    };
    let g = build_generators(&spec, (&wp, &wq), &gate(), &sim).unwrap();
    let ops = DenseOperators::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let t = rng.gen_range(0.0..spec.tau);
        let h = ops.hamiltonian(&g, t, wp.value(t).unwrap(), wq.value(t).unwrap());
        let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((&h - h.adjoint()).iter().all(|z| z.norm() <= 1e-13 * scale));
    }
}

#[test]
fn engines_agree_with_damping_and_thermal_start() {
    let spec = two_ion(150.0);
    let (wp, wq, _) = pulses(&spec, Method::MinRabi);
    let s = 0.5f64.sqrt();
    let base = SimConfig {
        n_cut: 4,
        initial_spin: InitialSpin::Custom([C64::new(s, 0.0), C64::new(0.0, 0.3), C64::new(0.2, -0.1), C64::new(0.4, 0.0)]),
        initial_phonon: InitialPhonon::Thermal(vec![0.05, 0.02]),
        ..Default::default()
    };
    let fact = simulate_report(&spec, (&wp, &wq), &gate(), &base).unwrap();
    let dense = simulate_report(
        &spec,
        (&wp, &wq),
        &gate(),
        &SimConfig {
            engine: Engine::Dense,
            ..base
        },
    )
    .unwrap();
    let diff = (fact.noisy_spin - dense.noisy_spin).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    assert!(diff < 1e-11, "{diff:e}\n{}\n{}", fact.noisy_spin, dense.noisy_spin);
    assert!((fact.ideal_spin - dense.ideal_spin).iter().all(|z| z.norm() < 1e-11));
    assert!((fact.infidelity - dense.infidelity).abs() < 1e-11);
    assert!((fact.leakage - dense.leakage).abs() < 1e-12);
}

#[test]
fn dense_engine_respects_memory_budget() {
    let spec = two_ion(0.0);
    let (wp, wq, _) = pulses(&spec, Method::MinRabi);
    let sim = SimConfig {
        engine: Engine::Dense,
        memory_budget: 1 << 20,
        ..Default::default()
    };
    let err = build_generators(&spec, (&wp, &wq), &gate(), &sim).unwrap_err();
    assert!(matches!(err, msgate_core::Error::OverBudget { .. }));
}

#[test]
fn noiseless_run_reaches_ms_target() {
    let spec = two_ion(0.0);
    let (wp, wq, theta) = pulses(&spec, Method::HeatingOptimal);
    let sim = SimConfig::default();
    let rep = simulate_report(&spec, (&wp, &wq), &gate(), &sim).unwrap();
    assert!(rep.infidelity <= 1e-9);
    let target = ms_target(theta, &sim.initial_spin.amplitudes().unwrap());
    assert!(1.0 - pure_state_fidelity(&target, &rep.ideal_spin) <= 1e-6);
    assert!(rep.trace_residual <= 1e-8);
}

#[test]
fn infidelity_is_linear_at_small_rates() {
    let (wp, wq, _) = pulses(&two_ion(100.0), Method::HeatingOptimal);
    let sim = SimConfig {
        n_cut: 8,
        ..Default::default()
    };
    let a = simulate_report(&two_ion(20.0), (&wp, &wq), &gate(), &sim).unwrap();
    let b = simulate_report(&two_ion(40.0), (&wp, &wq), &gate(), &sim).unwrap();
    let r = b.infidelity / a.infidelity;
    assert!((r - 2.0).abs() < 0.2, "{r}");
    assert!(a.min_eig > -1e-7);
}

#[test]
fn step_halving_is_converged() {
    let spec = two_ion(100.0);
    let (wp, wq, _) = pulses(&spec, Method::MinRabi);
    let coarse = SimConfig {
        n_cut: 8,
        ..Default::default()
    };
    let fine = SimConfig {
        dt: StepSize::Auto { divisor: 80.0 },
        ..coarse.clone()
    };
    let a = simulate_report(&spec, (&wp, &wq), &gate(), &coarse).unwrap();
    let b = simulate_report(&spec, (&wp, &wq), &gate(), &fine).unwrap();
    assert!((a.infidelity - b.infidelity).abs() <= 1e-8, "{} vs {}", a.infidelity, b.infidelity);
}
