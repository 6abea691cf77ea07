use proptest::prelude::*;
use vsi_core::engine::{steady_state, DensityMatrix, Liouvillian};
use vsi_core::lab::*;
use vsi_core::model::{DriveConfig, Level, ModelParams, Transition};

fn table() -> ModelParams {
    ModelParams::reference()
}

fn exp_trace(tau: f64, n: usize, dt: f64) -> ExperimentTrace {
    let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let s = t.iter().map(|x| (-x / tau).exp()).collect();
    ExperimentTrace::new(t, s, TraceMeta::new("synthetic")).unwrap()
}

#[test]
fn dark_segment_from_ground_is_silent() {
    let seq = PulseSequence::new(InitialState::Level { level: Level::GsHalf }).then(
        PulseSegment::new(DriveConfig::dark(), 50.0).recorded(Record::TimeResolved { bin_ns: 1.0 }),
    );
    let out = run_sequence(&seq, &table()).unwrap();
    assert_eq!(out.trace.len(), 50);
    assert!(out.trace.signal.iter().all(|&s| s == 0.0));
}

#[test]
fn excited_state_lifetimes_from_pulsed_decay() {
    let cal = Calibration::default();
    for (line, want) in [(Transition::O1, 6.09), (Transition::O2, 11.35)] {
        let tr = simulate_es_lifetime(line, &table(), &cal).unwrap();
        let f = fit_single_exponential(&tr).unwrap();
        assert!((f.tau_ns - want).abs() < 0.05, "{line:?}: {}", f.tau_ns);
    }
}

#[test]
fn repetitions_carry_state_and_average() {
    let cal = Calibration::default();
    let mut seq = es_lifetime_sequence(Transition::O1, &cal);
    let first = run_sequence(&seq, &table()).unwrap();
    let mut cont = seq.clone();
    cont.initial = InitialState::from_state(&first.final_state);
    let second = run_sequence(&cont, &table()).unwrap();
    seq.repetitions = 2;
    let both = run_sequence(&seq, &table()).unwrap();
    for ((a, b), m) in first.trace.signal.iter().zip(&second.trace.signal).zip(&both.trace.signal) {
        assert!((0.5 * (a + b) - m).abs() <= 1e-9 * m.abs().max(1e-12));
    }
    assert!((both.final_state.population(Level::GsHalf) - second.final_state.population(Level::GsHalf)).abs() < 1e-9);
}

#[test]
fn slow_tail_follows_the_slowest_generator_mode() {
    let p = table();
    let cal = Calibration::default();
    for power in [6.0, 20.0] {
        let tr = simulate_resonant_decay(power, Transition::O2, &p, 20_000.0, &cal).unwrap();
        let tail = tail_time_constant(&tr, 5_000.0).unwrap();
        let oracle =
            slowest_time_constant(&p, &cal.resonant(Transition::O2, power), &DensityMatrix::thermal_ground()).unwrap();
        assert!((tail / oracle - 1.0).abs() < 0.02, "{power} nW: {tail} vs {oracle}");
        assert!(tr.signal.last().unwrap() / tr.peak() < 1e-2);
    }
}

#[test]
fn disconnecting_ms2_removes_the_long_tail() {
    let p = table();
    let mut q = p.clone();
    q.rates.gamma_1p = 1e-12;
    q.rates.gamma_2p = 1e-12;
    let cal = Calibration::default();
    let with = tail_time_constant(&simulate_resonant_decay(6.0, Transition::O2, &p, 20_000.0, &cal).unwrap(), 5_000.0)
        .unwrap();
    let without =
        tail_time_constant(&simulate_resonant_decay(6.0, Transition::O2, &q, 20_000.0, &cal).unwrap(), 1_000.0)
            .unwrap();
    assert!(without < 0.3 * with, "{without} vs {with}");
}

#[test]
fn doubling_kappa_shortens_the_tail() {
    let p = table();
    let mut q = p.clone();
    q.rates.kappa_deshelve *= 2.0;
    let cal = Calibration::default();
    // 12 nW has no measured override, so the deshelving law applies.
    let tail = |m: &ModelParams| {
        tail_time_constant(&simulate_resonant_decay(12.0, Transition::O2, m, 20_000.0, &cal).unwrap(), 5_000.0)
            .unwrap()
    };
    assert!(tail(&q) < tail(&p));
}

#[test]
fn delayed_pulse_recovers_with_delay() {
    let delays = [0.0, 100.0, 300.0, 1_000.0, 3_000.0, 10_000.0, 40_000.0, 60_000.0];
    let d = simulate_delayed_pulse(&delays, &table(), &Calibration::default()).unwrap();
    for line in [Transition::O1, Transition::O2] {
        let s = &d.line(line).signal;
        assert!(s.windows(2).all(|w| w[1] >= w[0]), "{line:?}: {s:?}");
        assert!(s[0] / s[7] < 1.0);
        assert!((s[7] - s[6]) / s[7] < 1e-2, "{line:?} not saturated");
        assert_eq!(d.line(line).times, delays.to_vec());
    }
    assert!(simulate_delayed_pulse(&[-1.0], &table(), &Calibration::default()).is_err());
}

#[test]
fn repump_contrast_relaxes_to_the_off_resonant_split() {
    let p = table();
    let cal = Calibration::default();
    let t: Vec<f64> = (0..=40).map(|k| 2.0 * f64::from(k)).collect();
    let o1 = simulate_repump_contrast(&t, Transition::O1, &p, &cal).unwrap();
    let o2 = simulate_repump_contrast(&t, Transition::O2, &p, &cal).unwrap();
    let end = o2.last().unwrap().delta_p;
    assert!((end - 0.14).abs() < 0.03, "{end}");
    assert!((o1.last().unwrap().delta_p - end).abs() < 1e-3);
    // Initialised into ±3/2, the contrast passes through zero on the way.
    assert!(o1[0].signed < 0.0);
    let crossing = o1.windows(2).find(|w| w[0].signed < 0.0 && w[1].signed >= 0.0).unwrap();
    assert!((5.0..=20.0).contains(&crossing[1].t_repump_us));
    assert!(o2.iter().all(|c| c.signed > 0.0));
}

#[test]
fn repump_without_pump_keeps_the_contrast() {
    let cal = Calibration {
        c_w: 0.0,
        ..Calibration::default()
    };
    let mut p = table();
    p.rates.gamma_1 = 1e-12;
    p.rates.gamma_1p = 1e-12;
    p.rates.gamma_2 = 1e-12;
    p.rates.gamma_2p = 1e-12;
    let c = simulate_repump_contrast(&[0.0, 5.0, 20.0], Transition::O2, &p, &cal).unwrap();
    assert!(c.iter().all(|x| (x.delta_p - c[0].delta_p).abs() < 1e-9));
}

#[test]
fn resonant_pumping_initialises_the_spin() {
    let p = table();
    let cal = Calibration::default();
    let o2 = simulate_spin_pumping(25.0, 6.0, Transition::O2, &p, &cal).unwrap();
    let o1 = simulate_spin_pumping(25.0, 6.0, Transition::O1, &p, &cal).unwrap();
    assert!(o2.ground_normalized().0 >= 0.9);
    assert!(o1.ground_normalized().1 >= 0.9);
    let start = simulate_spin_pumping(0.0, 6.0, Transition::O2, &p, &cal).unwrap();
    let (a, b) = start.ground_normalized();
    assert!(a > b && (a - 0.57).abs() < 0.02, "{a}/{b}");
}

#[test]
fn driven_subspace_depletes_monotonically() {
    let t: Vec<f64> = (0..=60).map(|k| 0.5 * f64::from(k)).collect();
    for power in [6.0, 20.0] {
        let c = spin_pumping_curve(&t, power, Transition::O2, &table(), &Calibration::default()).unwrap();
        assert!(c.windows(2).all(|w| w[1].p_three_half <= w[0].p_three_half + 1e-12));
    }
}

#[test]
fn pumping_times_must_ascend() {
    assert!(spin_pumping_curve(&[2.0, 1.0], 6.0, Transition::O2, &table(), &Calibration::default()).is_err());
}

#[test]
fn spin_rabi_fringe_sign_follows_readout_line() {
    let p = table();
    let cal = Calibration::default();
    let dur: Vec<f64> = (0..=80).map(|k| 5.0 * f64::from(k)).collect();
    let dark = fit_rabi_fringe(&simulate_spin_rabi(&dur, Transition::O2, 20.0, &p, &cal).unwrap()).unwrap();
    assert_eq!(dark.sign, -1.0);
    assert!((dark.omega - std::f64::consts::PI / cal.mw_pi_ns).abs() < 1e-6);

    // Pumped on O2, read on O1: the fringe starts bright.
    let readout = cal.resonant(Transition::O1, cal.init_power_nw);
    let mut traces = Vec::new();
    for &d in &dur {
        let mut seq = PulseSequence::new(InitialState::Level { level: Level::GsHalf })
            .then_mw(MwGate { angle_rad: std::f64::consts::PI * d / cal.mw_pi_ns, phase_rad: 0.0 });
        seq = seq.then(PulseSegment::new(readout, 100.0).recorded(Record::Integrated { window_ns: 100.0 }));
        traces.push(run_sequence(&seq, &p).unwrap().trace.signal[0]);
    }
    let tr = ExperimentTrace::new(dur, traces, TraceMeta::new("rabi")).unwrap();
    let bright = fit_rabi_fringe(&tr).unwrap();
    assert_eq!(bright.sign, 1.0);
    assert!(bright.contrast > 0.9);
}

#[test]
fn exponential_fit_under_shot_noise() {
    let clean = exp_trace(11.35, 600, 0.1);
    for seed in 0..100 {
        let noisy = add_shot_noise(&clean, 1e4, seed).unwrap();
        let f = fit_single_exponential(&noisy).unwrap();
        assert!((f.tau_ns / 11.35 - 1.0).abs() < 0.02, "seed {seed}: {}", f.tau_ns);
    }
}

#[test]
fn exact_exponential_to_high_precision() {
    let f = fit_single_exponential(&exp_trace(11.35, 600, 0.1)).unwrap();
    assert!((f.tau_ns / 11.35 - 1.0).abs() < 1e-6);
    assert!(f.residual_norm < 1e-8);
}

#[test]
fn shot_noise_converges_at_large_counts() {
    let clean = exp_trace(10.0, 40, 1.0);
    let noisy = add_shot_noise(&clean, 1e6, 3).unwrap();
    let scale = 1e6 / clean.peak();
    let expected: f64 = clean.signal.iter().map(|c| c * scale).sum();
    let got: f64 = noisy.signal.iter().sum();
    assert!((got / expected - 1.0).abs() < 5e-3);
    assert!((noisy.signal[0] / 1e6 - 1.0).abs() < 5e-3);
}

#[test]
fn synthetic_fringe_contrast() {
    let w = std::f64::consts::PI / 100.0;
    let t: Vec<f64> = (0..200).map(|k| 2.5 * f64::from(k)).collect();
    let s = t.iter().map(|x| 1e3 * (1.0 + 0.14 * (w * x).cos())).collect();
    let clean = ExperimentTrace::new(t, s, TraceMeta::new("fringe")).unwrap();
    let f = fit_rabi_fringe(&clean).unwrap();
    assert!((f.contrast / 0.14 - 1.0).abs() < 0.02);
    let noisy = fit_rabi_fringe(&add_shot_noise(&clean, 1e5, 11).unwrap()).unwrap();
    assert!((noisy.contrast / 0.14 - 1.0).abs() < 0.02, "{}", noisy.contrast);
}

#[test]
fn trace_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("decay.csv");
    let mut tr = simulate_es_lifetime(Transition::O2, &table(), &Calibration::default()).unwrap();
    tr.meta.seed = Some(4);
    tr.save(&path).unwrap();
    let back = ExperimentTrace::load(&path).unwrap();
    assert_eq!(back, tr);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn off_resonant_split_favours_half(w in 1e-6f64..1e-1) {
        let l = Liouvillian::for_drive(&table(), &DriveConfig::off_resonant(w, 0.0)).unwrap();
        let rho = steady_state(&l).unwrap();
        prop_assert!(rho.population(Level::GsHalf) > rho.population(Level::GsThreeHalf));
    }

    #[test]
    fn recorded_states_stay_normalised(power in 1.0f64..25.0, line in prop_oneof![Just(Transition::O1), Just(Transition::O2)], t in 0.1f64..30.0) {
        let cal = Calibration::default();
        let seq = PulseSequence::new(InitialState::ThermalGround)
            .then(PulseSegment::new(cal.off_resonant(30.0), 2_000.0))
            .then(PulseSegment::new(cal.resonant(line, power), t * 100.0).recorded(Record::TimeResolved { bin_ns: t }));
        let out = run_sequence(&seq, &table()).unwrap();
        prop_assert!((out.final_state.trace() - 1.0).abs() < 1e-9);
        prop_assert!(out.final_state.min_eigenvalue() >= -1e-9);
        prop_assert!(out.trace.signal.iter().all(|&s| s >= 0.0));
    }
}
