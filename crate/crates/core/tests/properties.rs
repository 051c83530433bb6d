mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use snv_core::device::DeviceParams;
use snv_core::fitting::{self, finite_difference_jacobians, models, Dataset, FitModel};
use snv_core::lindblad::{apply_superoperator, evolve, steady_state, vectorize, LindbladSystem};
use snv_core::protocols::*;
use snv_core::raman::{self, RamanDriveParams};
use snv_core::units;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn small_system(seed: u64, max_dim: usize) -> LindbladSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let sys = common::random_system(&mut rng);
        if sys.dim() <= max_dim {
            return sys;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trajectories_stay_physical(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = common::random_system(&mut rng);
        let rho0 = common::random_state(&mut rng, sys.dim());
        let out = evolve(&sys, &rho0, &[0.1, 0.5, 2.0, 6.0]).unwrap();
        for s in &out.states {
            prop_assert!((s.trace() - 1.0).abs() < 1e-9);
            prop_assert!(s.hermiticity_error() < 1e-10);
            prop_assert!(s.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn evolve_matches_exponential_oracle(seed in any::<u64>(), t in 0.05f64..3.0) {
        let sys = small_system(seed, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let rho0 = common::random_state(&mut rng, sys.dim());
        let got = evolve(&sys, &rho0, &[t]).unwrap();
        let want = common::oracle_propagate(&sys, &rho0, t);
        prop_assert!((got.states[0].matrix() - want).camax() < 1e-7);
    }

    #[test]
    fn steady_state_is_a_fixed_point(seed in any::<u64>()) {
        let sys = small_system(seed, 4);
        let ss = steady_state(&sys).unwrap();
        let l = sys.liouvillian();
        let sv = l.clone().svd(false, false).singular_values;
        let slowest = sv.iter().cloned().filter(|&s| s > 1e-9 * sv.max()).fold(f64::INFINITY, f64::min);
        let t = 10.0 / slowest;
        let later = apply_superoperator(&sys.propagator(t), &ss).unwrap();
        prop_assert!((later.matrix() - ss.matrix()).norm() < 1e-8);
        prop_assert!((l * vectorize(ss.matrix())).norm() < 1e-10 * sys.liouvillian().norm());
    }

    #[test]
    fn rabi_rate_matches_lambda_legs(power in 0.1f64..2000.0, delta in 50.0f64..5000.0, eta in 2.0f64..400.0) {
        let dev = DeviceParams { eta, ..DeviceParams::default() };
        let drive = RamanDriveParams::new(delta, power);
        let rabi = raman::effective_rabi_rate(&drive, &dev).unwrap();
        let lp = raman::lambda_params(&drive, &dev).unwrap();
        let legs = lp.omega1_mhz * lp.omega2_mhz / (2.0 * delta);
        prop_assert!((rabi / legs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabi_rate_depends_on_power_over_detuning(power in 0.1f64..500.0, delta in 50.0f64..3000.0, k in 0.1f64..10.0) {
        let dev = DeviceParams::default();
        let a = raman::effective_rabi_rate(&RamanDriveParams::new(delta, power), &dev).unwrap();
        let b = raman::effective_rabi_rate(&RamanDriveParams::new(k * delta, k * power), &dev).unwrap();
        prop_assert!((a / b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scattering_times_differ_by_eta(power in 0.1f64..2000.0, delta in 50.0f64..5000.0) {
        let dev = DeviceParams::default();
        let sc = raman::scattering_rate(&RamanDriveParams::new(delta, power), &dev).unwrap();
        prop_assert!((sc.t1_os_ms / sc.t2_os_ms / dev.eta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_monotone(omega in 1e5f64..1e8, gamma in 1e4f64..1e8, k in 1.0f64..5.0) {
        let t2 = 1.3e-6;
        let f = raman::gate_fidelity(omega, gamma, t2);
        prop_assert!(raman::gate_fidelity(k * omega, gamma, t2) >= f);
        prop_assert!(raman::gate_fidelity(omega, k * gamma, t2) <= f);
    }

    #[test]
    fn init_rate_monotone_and_bounded(p in 0.0f64..1e4, k in 1.0f64..10.0) {
        let dev = DeviceParams::default();
        let r = raman::init_rate(p, &dev);
        prop_assert!(raman::init_rate(k * p, &dev) >= r);
        prop_assert!(r <= dev.gamma() / (2.0 * dev.eta));
    }

    #[test]
    fn forward_and_central_jacobians_agree(t2 in 5.0f64..60.0, n in 0.5f64..5.0, v0 in 0.05f64..1.0) {
        let x = grid(0.5, 80.0, 30);
        let (fwd, cen) = finite_difference_jacobians(&models::stretched_exp(), &[v0, t2, n, 0.01], &x).unwrap();
        for (a, b) in fwd.iter().zip(cen.iter()) {
            prop_assert!((a - b).abs() < 1e-4 * b.abs().max(1e-3));
        }
    }
}

fn round_trip(name: &str, truth: &[f64], x: Vec<f64>, dim: usize, factor: f64) -> Result<(), TestCaseError> {
    let model = models::from_name(name, &DeviceParams::default(), 0.05, 5.0).unwrap();
    let y = model.eval(truth, &x).unwrap();
    let start: Vec<f64> = truth.iter().map(|v| v * factor).collect();
    let fit = fitting::least_squares(&model.with_initials(&start), &Dataset::multi(x, dim, y))
        .map_err(|e| TestCaseError::fail(format!("{name}: {e}")))?;
    for (got, want) in fit.values.iter().zip(truth) {
        prop_assert!((got / want - 1.0).abs() < 1e-6, "{name}: {got} vs {want}");
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn linear_round_trip(a in 0.1f64..5.0, b in 0.1f64..5.0) {
        round_trip("linear", &[a, b], grid(-3.0, 5.0, 30), 1, 1.05)?;
    }

    #[test]
    fn lorentzian_pair_round_trip(half in 15.0f64..30.0, w in 0.5f64..3.0, a in 0.1f64..1.0, c in 0.01f64..0.2) {
        round_trip("lorentzian-pair", &[-half, half, w, 1.1 * w, a, 0.9 * a, c], grid(-40.0, 40.0, 400), 1, 1.01)?;
    }

    #[test]
    fn ramsey_round_trip(amp in 0.1f64..0.5, t2 in 0.8f64..3.0, f in 2.0f64..10.0, ph in 0.2f64..2.5, off in 0.2f64..0.6) {
        round_trip("ramsey", &[amp, t2, f, ph, off], grid(0.0, 3.0, 300), 1, 1.01)?;
    }

    #[test]
    fn stretched_exp_round_trip(v0 in 0.1f64..1.0, t2 in 10.0f64..40.0, n in 1.0f64..4.5, c in 0.005f64..0.05) {
        round_trip("stretched-exp", &[v0, t2, n, c], grid(0.0, 80.0, 80), 1, 1.05)?;
    }

    #[test]
    fn cosine_round_trip(a in 0.05f64..0.5, b in 0.2f64..0.8) {
        round_trip("cosine", &[a, b], grid(0.0, 12.0, 30), 1, 1.05)?;
    }

    #[test]
    fn exp_decay_round_trip(a in 100.0f64..3000.0, tau in 0.3f64..3.0, c in 10.0f64..100.0) {
        round_trip("exp-decay", &[a, tau, c], grid(0.0, 10.0, 100), 1, 1.05)?;
    }

    #[test]
    fn init_saturation_round_trip(p_sat in 1.0f64..20.0, eta in 20.0f64..200.0) {
        round_trip("init-saturation", &[p_sat, eta], vec![0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0], 1, 1.05)?;
    }

    #[test]
    fn t1_recovery_round_trip(t1 in 2.0f64..40.0) {
        round_trip("t1-recovery", &[t1], grid(0.0, 100.0, 40), 1, 1.05)?;
    }

    #[test]
    fn ramsey_2d_round_trip(ac in 1.0f64..5.0, c0 in 0.1f64..0.4, c1 in 4.0f64..15.0, c2 in 0.02f64..0.2) {
        let x: Vec<f64> = grid(0.0, 2.0, 41).into_iter().flat_map(|t| grid(-3.0, 3.0, 13).into_iter().flat_map(move |d| [t, d])).collect();
        round_trip("ramsey-2d", &[ac, c0, c1, c2], x, 2, 1.02)?;
    }
}

fn quiet_context() -> QubitContext {
    QubitContext::new(DeviceParams::default(), NoiseModel::calibrated(&DeviceParams::default()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn decoupling_is_deterministic_and_bounded(seed in any::<u64>()) {
        let ctx = quiet_context();
        let cfg = DecouplingConfig { shots: 20, seed, ..DecouplingConfig::new(DecouplingKind::Hahn) };
        let phases = grid(0.0, 6.0, 6);
        let a = run_decoupling(&[4.0, 20.0], &phases, &cfg, &ctx).unwrap();
        let b = run_decoupling(&[4.0, 20.0], &phases, &cfg, &ctx).unwrap();
        prop_assert_eq!(a.scan.to_csv(), b.scan.to_csv());
        for (v, e) in a.scan.values.iter().zip(&a.scan.stderr) {
            prop_assert!(*v >= -3.0 * e - 1e-12 && *v <= 1.0 + 3.0 * e + 1e-12);
        }
    }
}

#[test]
fn cpmg_beats_hahn_under_slow_noise() {
    let dev = DeviceParams::default();
    let noise = NoiseModel {
        quasi_static_sigma: units::mhz(0.5),
        drift_sigma: noise::drift_sigma(noise::DEFAULT_DRIFT_TIME),
        ..NoiseModel::noiseless()
    };
    let mut ctx = QubitContext::new(dev, noise);
    ctx.calibration.optical_scattering = false;
    ctx.calibration.rabi_mhz = Some(100.0);
    let drive = DecouplingConfig::new(DecouplingKind::Hahn).drive;
    let phases = grid(0.0, 4.0 * std::f64::consts::PI, 17)[..16].to_vec();
    let taus = [2.0, 10.0, 25.0, 40.0];
    let run = |kind| {
        let cfg = DecouplingConfig { shots: 200, drive, ..DecouplingConfig::new(kind) };
        run_decoupling(&taus, &phases, &cfg, &ctx).unwrap().visibility
    };
    let (hahn, cpmg) = (run(DecouplingKind::Hahn), run(DecouplingKind::Cpmg2));
    for (h, c) in hahn.iter().zip(&cpmg) {
        assert!(c.value + 3.0 * c.error.hypot(h.error) >= h.value, "{c:?} vs {h:?}");
    }
}

#[test]
fn fringe_frequency_budget_holds_on_every_row() {
    let ctx = quiet_context();
    let cfg = RamseyConfig::default();
    let taus = grid(0.0, 3.0, 301);
    for delta in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let row = run_ramsey(&taus, &[delta], &cfg, &ctx).unwrap();
        let fit = fitting::fit_ramsey_trace(&taus, &row.values, None).unwrap();
        let shift = fit.get("freq") - cfg.serrodyne_mhz - delta;
        let err = fit.uncertainty("freq").unwrap();
        assert!((shift - cfg.ac_stark_mhz).abs() < 3.0 * err.max(1e-3), "δ = {delta}: {shift} ± {err}");
    }
}

#[test]
fn ramsey_envelope_recovers_t2_star() {
    let dev = DeviceParams::default();
    let noise = NoiseModel { quasi_static_sigma: noise::quasi_static_sigma(dev.t2_star_us), ..NoiseModel::noiseless() };
    let mut ctx = QubitContext::new(dev.clone(), noise);
    ctx.calibration.optical_scattering = false;
    let taus = grid(0.0, 3.0, 301);
    let row = run_ramsey(&taus, &[-1.0], &RamseyConfig::default(), &ctx).unwrap();
    let fit = fitting::fit_ramsey_trace(&taus, &row.values, None).unwrap();
    assert!((fit.get("t2_star") / dev.t2_star_us - 1.0).abs() < 0.05, "{}", fit.get("t2_star"));
}
