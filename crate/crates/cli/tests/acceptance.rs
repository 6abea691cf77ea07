//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach stdout. The
//! process exits 0 even when a criterion fails; set `VSI_ACCEPTANCE_STRICT=1`
//! to turn any FAIL into a non-zero exit.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::Matrix6;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use vsi_core::engine::{build_hamiltonian, build_liouvillian, evolve, evolve_rk, steady_state, DensityMatrix, C64};
use vsi_core::fit::{joint_fit_with, synthesize, FitProblem, JointOptions, LifetimeConstraint, SynthSpec};
use vsi_core::ghz::{
    budget, min_purcell, optimize_purcell, pi_pulse_duration, simulate_ideal_protocol, zpl_emission_prob, FinalGate,
    MinPurcell, ProtocolConfig, PURCELL_RANGE,
};
use vsi_core::lab::{
    fit_single_exponential, simulate_es_lifetime, simulate_repump_contrast, simulate_spin_pumping, Calibration,
};
use vsi_core::model::{
    es_lifetime, DriveConfig, Level, Metastable, ModelParams, RateSet, ResonantTarget, Transition,
};

struct Report {
    failed: Vec<usize>,
}

impl Report {
    fn line(&mut self, id: usize, ok: bool, name: &str, detail: String, started: Instant) {
        if !ok {
            self.failed.push(id);
        }
        println!(
            "{} criterion {id} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn lifetimes(r: &mut Report) {
    let t = Instant::now();
    let p = ModelParams::reference();
    let cal = Calibration::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (line, target) in [(Transition::O1, 6.1), (Transition::O2, 11.3)] {
        let tau = es_lifetime(&p.rates, line);
        let refit = fit_single_exponential(&simulate_es_lifetime(line, &p, &cal).unwrap())
            .unwrap()
            .tau_ns;
        ok &= rel(tau, target) < 0.01 && rel(refit, tau) < 0.01;
        detail.push(format!("{line:?} {tau:.3} ns (target {target}), refit {refit:.3} ns"));
    }
    r.line(1, ok, "lifetime consistency", detail.join("; "), t);
}

fn metastable(r: &mut Report) {
    let t = Instant::now();
    let p = ModelParams::reference();
    let mut rows = vec![("MS1".to_string(), p.ms_lifetime(Metastable::Ms1, 0.0), 201.84)];
    for (pw, tab) in [(6.0, 2964.37), (10.0, 2188.93), (15.0, 1085.40), (20.0, 740.85)] {
        rows.push((format!("MS2@{pw}nW"), p.ms_lifetime(Metastable::Ms2, pw), tab));
    }
    // The reference rows carry two decimals, so they are also compared at that precision.
    let printed = rows.iter().all(|(_, v, tab)| ((v * 100.0).round() / 100.0 - tab).abs() < 1e-9);
    let worst = rows.iter().map(|(_, v, tab)| rel(*v, *tab)).fold(0.0, f64::max);
    let detail = rows
        .iter()
        .map(|(n, v, _)| format!("{n} {v:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    r.line(
        2,
        printed && worst < 1e-6,
        "metastable algebra",
        format!("{detail}; all equal at printed precision: {printed}; max raw rel. deviation {worst:.2e} (limit 1e-6)"),
        t,
    );
}

struct Case {
    rates: RateSet<f64>,
    drive: DriveConfig,
    rho: DensityMatrix,
    t: f64,
}

fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let mut life = || 10f64.powf(rng.random_range(1.0..4.0));
    let (a, b, c, d, e, f, g, h) = (life(), life(), life(), life(), life(), life(), life(), life());
    let mut rates = RateSet::from_lifetimes(a.min(100.0), b, c, d, e, f, g, h, 0.0);
    rates.kappa_deshelve = rng.random_range(0.0..1e-4);
    let target = [ResonantTarget::None, ResonantTarget::O1, ResonantTarget::O2, ResonantTarget::Both]
        [rng.random_range(0..4)];
    let driven = target != ResonantTarget::None;
    let drive = DriveConfig {
        omega_l: if driven { rng.random_range(0.0..0.2) } else { 0.0 },
        delta_l: if driven { rng.random_range(-0.3..0.3) } else { 0.0 },
        target,
        w_offres: if !driven && rng.random_bool(0.5) { 10f64.powf(rng.random_range(-6.0..-1.0)) } else { 0.0 },
        omega_mw: rng.random_range(0.0..0.05),
        delta_mw: rng.random_range(-0.05..0.05),
        power_nw: rng.random_range(0.0..30.0),
    };
    let m = Matrix6::from_fn(|_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let m = m * m.adjoint();
    let tr: f64 = (0..6).map(|i| m[(i, i)].re).sum();
    let rho = DensityMatrix::new(m / C64::new(tr, 0.0)).unwrap();
    let t = 10f64.powf(rng.random_range(0.0..6.0));
    Case { rates, drive, rho, t }
}

fn master_equation(r: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cases: Vec<Case> = (0..1000).map(|_| random_case(&mut rng)).collect();
    let base = ModelParams::reference();
    // (trace, hermiticity, min eigenvalue, expm vs RK)
    let stats: Vec<[f64; 4]> = cases
        .par_iter()
        .map(|c| {
            let h = build_hamiltonian(&base, &c.drive).unwrap();
            let l = build_liouvillian(&h, &c.rates, &c.drive);
            let a = evolve(&c.rho, &l, c.t).unwrap();
            let b = evolve_rk(&c.rho, &l, c.t).map_or(f64::INFINITY, |b| (a.coords() - b.coords()).amax());
            [(a.trace() - 1.0).abs(), a.hermiticity_error(), a.min_eigenvalue(), b]
        })
        .collect();
    let max = |k: usize| stats.iter().map(|s| s[k]).fold(0.0, f64::max);
    let min_eig = stats.iter().map(|s| s[2]).fold(f64::INFINITY, f64::min);
    let rk_bad = stats.iter().filter(|s| !(s[3] < 1e-7)).count();
    let ok = max(0) < 1e-9 && max(1) < 1e-10 && min_eig >= -1e-9 && rk_bad == 0 && t.elapsed().as_secs() < 120;
    r.line(
        3,
        ok,
        "master-equation invariants",
        format!(
            "1000 cases: max trace err {:.1e}, max hermiticity {:.1e}, min eigenvalue {:.1e}, expm vs RK max {:.1e} ({rk_bad} cases >= 1e-7), budget 120 s",
            max(0),
            max(1),
            min_eig,
            max(3)
        ),
        t,
    );
}

fn recover(r: &mut Report) {
    let t = Instant::now();
    let p = ModelParams::reference();
    let cal = Calibration::default();
    let mut ok = true;
    let mut worst = [0.0f64; 3];
    for seed in 1..=5u64 {
        let ds = synthesize(&p, &cal, &SynthSpec::default(), seed).unwrap();
        let prob = FitProblem::new(ds, LifetimeConstraint::from_rates(&p.rates));
        let opts = JointOptions {
            uncertainties: false,
            ..JointOptions::default()
        };
        let fit = joint_fit_with(&prob, seed, &opts).unwrap();
        let (a, b) = (fit.params.rates, p.rates);
        let branch = [(a.gamma_1, b.gamma_1), (a.gamma_1p, b.gamma_1p), (a.gamma_2, b.gamma_2), (a.gamma_2p, b.gamma_2p)]
            .iter()
            .map(|(x, y)| rel(*x, *y))
            .fold(0.0, f64::max);
        let ms1 = rel(a.gamma_3, b.gamma_3).max(rel(a.gamma_4, b.gamma_4));
        let ms2 = [6.0, 10.0, 15.0, 20.0]
            .iter()
            .map(|&pw| rel(fit.params.ms2_rate_at(pw), p.ms2_rate_at(pw)))
            .fold(0.0, f64::max);
        ok &= branch < 0.10 && ms1 < 0.15 && ms2 < 0.20;
        for (w, v) in worst.iter_mut().zip([branch, ms1, ms2]) {
            *w = w.max(v);
        }
        println!("    seed {seed}: γ₁,γ₁′,γ₂,γ₂′ {branch:.3}  γ₃,γ₄ {ms1:.3}  MS2 rows {ms2:.3}  [{:.0} s]", t.elapsed().as_secs_f64());
    }
    r.line(
        4,
        ok,
        "generate-fit-recover",
        format!(
            "5 seeds, worst rel. error: branching {:.3} (≤0.10), MS1 outlets {:.3} (≤0.15), MS2 per power {:.3} (≤0.20)",
            worst[0], worst[1], worst[2]
        ),
        t,
    );
}

fn spin_dynamics(r: &mut Report) {
    let t = Instant::now();
    let p = ModelParams::reference();
    let cal = Calibration::default();
    let o2 = simulate_spin_pumping(20.0, cal.init_power_nw, Transition::O2, &p, &cal).unwrap().ground_normalized();
    let o1 = simulate_spin_pumping(20.0, cal.init_power_nw, Transition::O1, &p, &cal).unwrap().ground_normalized();
    let pumping = o2.0 >= 0.9 && o1.1 >= 0.9;

    let ws: Vec<f64> = (0..=50).map(|k| 10f64.powf(-7.0 + 6.0 * f64::from(k) / 50.0)).collect();
    let prefers_half = ws.iter().all(|&w| {
        let l = vsi_core::engine::Liouvillian::for_drive(&p, &DriveConfig::off_resonant(w, 0.0)).unwrap();
        let rho = steady_state(&l).unwrap();
        rho.population(Level::GsHalf) > rho.population(Level::GsThreeHalf)
    });
    let split = simulate_spin_pumping(0.0, cal.init_power_nw, Transition::O2, &p, &cal).unwrap().ground_normalized();

    let times: Vec<f64> = (0..=40).map(f64::from).collect();
    let curve = simulate_repump_contrast(&times, Transition::O1, &p, &cal).unwrap();
    let crossing = curve
        .windows(2)
        .find(|w| w[0].signed < 0.0 && w[1].signed >= 0.0)
        .map(|w| w[1].t_repump_us);
    let recovers = curve.last().is_some_and(|c| c.delta_p > 0.05);
    r.line(
        5,
        pumping && prefers_half && crossing.is_some() && recovers,
        "spin dynamics",
        format!(
            "20 µs pumping p½ {:.4} (O2), p¾ {:.4} (O1); steady p½ > p¾ at all {} W values: {prefers_half}; prepared split {:.3}/{:.3} (reported); O1 repump contrast crosses zero at {} µs, ends at Δp {:.3}",
            o2.0,
            o1.1,
            ws.len(),
            split.0,
            split.1,
            crossing.map_or("never".into(), |x| format!("{x:.0}")),
            curve.last().map_or(f64::NAN, |c| c.delta_p)
        ),
        t,
    );
}

fn grid_gap(c: &ProtocolConfig) -> f64 {
    let (lo, hi) = (PURCELL_RANGE.0.ln(), PURCELL_RANGE.1.ln());
    let grid = (0..10_000)
        .map(|k| budget(&c.with_purcell((lo + (hi - lo) * f64::from(k) / 9999.0).exp())).f_t)
        .fold(0.0, f64::max);
    grid - optimize_purcell(c).unwrap().budget.f_t
}

fn protocol_numbers(r: &mut Report) {
    let t = Instant::now();
    let rates = RateSet::reference();
    let pi = pi_pulse_duration(2.0 * std::f64::consts::PI);
    let p_o2 = zpl_emission_prob(&rates, 0.09, 1.0);
    let mins: Vec<MinPurcell> = (1..=4)
        .map(|n| min_purcell(&ProtocolConfig::new(n, rates), 0.5).unwrap())
        .collect();
    let feasible: Vec<bool> = mins.iter().map(|m| matches!(m, MinPurcell::Feasible { .. })).collect();
    let gap = (1..=10).map(|n| grid_gap(&ProtocolConfig::new(n, rates))).fold(f64::NEG_INFINITY, f64::max);
    let ok = (pi - 0.9).abs() <= 0.05
        && (p_o2 - 0.06).abs() <= 0.005
        && feasible == [true, true, true, false]
        && gap <= 1e-9;
    let p_min: Vec<String> = mins
        .iter()
        .map(|m| match m {
            MinPurcell::Feasible { purcell, .. } => format!("{purcell:.2}"),
            MinPurcell::Infeasible { best_f_t, .. } => format!("infeasible (best F_t {best_f_t:.3})"),
        })
        .collect();
    r.line(
        6,
        ok,
        "protocol numbers",
        format!(
            "π pulse {pi:.4} ns (target 0.9 ± 0.05); P_O2 {p_o2:.4} (target 0.06 ± 0.005); P_min(F_t ≥ 0.5) for N=1..4: {}; grid max − optimum over N=1..10 {gap:.1e}",
            p_min.join(", ")
        ),
        t,
    );
}

type C = vsi_core::ghz::C64;

fn expectation(psi: &[C], paulis: &[(usize, char)], nq: usize) -> f64 {
    let mut acc = C::new(0.0, 0.0);
    for (i, &a) in psi.iter().enumerate() {
        let mut j = i;
        let mut sign = 1.0;
        for &(q, op) in paulis {
            let bit = 1 << (nq - 1 - q);
            if op == 'X' {
                j ^= bit;
            } else if i & bit != 0 {
                sign = -sign;
            }
        }
        acc += psi[j].conj() * a * sign;
    }
    acc.re
}

fn overlap(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C>().norm_sqr()
}

fn protocol_algebra(r: &mut Report) {
    let t = Instant::now();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst: f64 = 0.0;
    for n in 1..=3 {
        let nq = n + 1;
        let ghz = simulate_ideal_protocol(n, FinalGate::X).unwrap().qubit_amplitudes().unwrap();
        let mut reference = vec![C::new(0.0, 0.0); 1 << nq];
        reference[0] = C::new(h, 0.0);
        reference[(1 << nq) - 1] = C::new(h, 0.0);
        worst = worst.max(1.0 - overlap(&ghz, &reference));

        let mut cluster = simulate_ideal_protocol(n, FinalGate::Hadamard).unwrap().qubit_amplitudes().unwrap();
        // local Z frame on every qubit after the first
        for (i, a) in cluster.iter_mut().enumerate() {
            if (i & ((1 << (nq - 1)) - 1)).count_ones() % 2 == 1 {
                *a = -*a;
            }
        }
        for k in 0..nq {
            let mut s = vec![(k, 'X')];
            if k > 0 {
                s.push((k - 1, 'Z'));
            }
            if k + 1 < nq {
                s.push((k + 1, 'Z'));
            }
            worst = worst.max(1.0 - expectation(&cluster, &s, nq));
        }
    }
    r.line(
        7,
        worst < 1e-10,
        "protocol algebra",
        format!("GHZ overlaps and cluster stabilizers for N=1..3, worst 1 − value {worst:.1e}"),
        t,
    );
}

fn optimized_fidelity_properties(r: &mut Report) {
    let t = Instant::now();
    let rates = RateSet::reference();
    let f_t: Vec<f64> = (1..=10)
        .map(|n| optimize_purcell(&ProtocolConfig::new(n, rates)).unwrap().budget.f_t)
        .collect();
    let monotone = f_t.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let boundary = f_t.iter().rposition(|&f| f >= 0.5).map(|i| i + 1);
    r.line(
        8,
        monotone && boundary == Some(3),
        "optimized fidelities (properties only)",
        format!(
            "F_t(P*) for N=1..10 non-increasing: {monotone}; largest N with F_t ≥ 0.5: {}; values {}",
            boundary.map_or("none".into(), |n| n.to_string()),
            f_t.iter().map(|f| format!("{f:.3}")).collect::<Vec<_>>().join(" ")
        ),
        t,
    );
}

fn digest(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|f| (f.file_name().unwrap().to_string_lossy().into_owned(), Sha256::digest(fs::read(&f).unwrap()).to_vec()))
        .collect();
    v.sort();
    v
}

fn determinism(r: &mut Report) {
    let t = Instant::now();
    let tmp = tempfile::TempDir::new().unwrap();
    let run = |threads: &str, args: &[&str]| {
        let o = Command::new(env!("CARGO_BIN_EXE_vsi"))
            .args(args)
            .env("VSI_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    let mut out = Vec::new();
    for threads in ["1", "2", "4"] {
        let data = tmp.path().join(format!("data{threads}"));
        let fit = tmp.path().join(format!("fit{threads}"));
        let (d, f) = (data.to_str().unwrap(), fit.to_str().unwrap());
        run(threads, &["synth", "--out", d, "--seed", "42"]);
        let manifest = data.join("manifest.json");
        run(
            threads,
            &["fit", "--manifest", manifest.to_str().unwrap(), "--out", f, "--seed", "42", "--generations", "3", "--restarts", "2"],
        );
        out.push((digest(&data), digest(&fit)));
    }
    let same = out.windows(2).all(|w| w[0] == w[1]);
    r.line(
        9,
        same,
        "determinism",
        format!(
            "synth ({} files) and fit ({} files, 3 generations × 2 restarts) byte-identical at VSI_THREADS=1,2,4: {same}",
            out[0].0.len(),
            out[0].1.len()
        ),
        t,
    );
}

fn main() {
    let mut r = Report { failed: Vec::new() };
    lifetimes(&mut r);
    metastable(&mut r);
    master_equation(&mut r);
    recover(&mut r);
    spin_dynamics(&mut r);
    protocol_numbers(&mut r);
    protocol_algebra(&mut r);
    optimized_fidelity_properties(&mut r);
    determinism(&mut r);
    println!("acceptance: {} of 9 criteria pass", 9 - r.failed.len());
    if !r.failed.is_empty() && std::env::var_os("VSI_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
