//! Measurement sequences expressed over the engine.

use serde::{Deserialize, Serialize};

use super::run::Evolution;
use super::sequence::{InitialState, PulseSegment, PulseSequence, Record};
use super::trace::{ExperimentTrace, TraceMeta};
use super::{run_sequence, LabError};
use nalgebra::DVector;

use crate::engine::{coords_trace, DensityMatrix, EngineError, Liouvillian, Propagator};
use crate::model::{DriveConfig, Level, ModelParams, Transition};

/// Conversion of laboratory powers into model drive parameters, plus the
/// fixed timings of the measurement sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Calibration {
    /// Ω_L = c_omega·√P, rad/ns per √nW.
    pub c_omega: f64,
    /// W_offres = c_w·P, ns⁻¹ per µW.
    pub c_w: f64,
    /// Off-resonant power counted by the MS2 deshelving law, nW per µW.
    pub offres_deshelve_nw_per_uw: f64,
    pub repump_power_uw: f64,
    pub prep_ns: f64,
    pub init_power_nw: f64,
    pub init_ns: f64,
    pub relax_ns: f64,
    pub spin_readout_ns: f64,
    pub delayed_pump_power_uw: f64,
    pub delayed_pump_ns: f64,
    pub delayed_readout_power_nw: f64,
    pub delayed_window_ns: f64,
    pub es_pulse_ns: f64,
    pub es_dark_ns: f64,
    pub es_bin_ns: f64,
    pub decay_bin_ns: f64,
    pub mw_pi_ns: f64,
    pub collection_scale: f64,
    /// Additive detector background per sample, in signal units.
    pub noise_floor: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Calibration {
            c_omega: 0.008,
            c_w: 1e-5,
            offres_deshelve_nw_per_uw: 0.01,
            repump_power_uw: 30.0,
            prep_ns: 40_000.0,
            init_power_nw: 20.0,
            init_ns: 500.0,
            relax_ns: 50_000.0,
            spin_readout_ns: 100.0,
            delayed_pump_power_uw: 4000.0,
            delayed_pump_ns: 4000.0,
            delayed_readout_power_nw: 20.0,
            delayed_window_ns: 100.0,
            es_pulse_ns: 1.5,
            es_dark_ns: 60.0,
            es_bin_ns: 0.1,
            decay_bin_ns: 10.0,
            mw_pi_ns: 100.0,
            collection_scale: 1.0,
            noise_floor: 0.0,
        }
    }
}

impl Calibration {
    pub fn rabi_frequency(&self, power_nw: f64) -> f64 {
        self.c_omega * power_nw.max(0.0).sqrt()
    }

    pub fn resonant(&self, line: Transition, power_nw: f64) -> DriveConfig {
        DriveConfig::resonant(line, self.rabi_frequency(power_nw), power_nw)
    }

    pub fn off_resonant(&self, power_uw: f64) -> DriveConfig {
        DriveConfig::off_resonant(self.c_w * power_uw, power_uw * self.offres_deshelve_nw_per_uw)
    }

    /// Microwave Rabi frequency giving a π rotation in `mw_pi_ns`.
    pub fn mw_rabi_frequency(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.mw_pi_ns)
    }

    fn detect(&self, s: f64) -> f64 {
        s * self.collection_scale + self.noise_floor
    }

    fn finish(&self, times: Vec<f64>, signal: Vec<f64>, meta: TraceMeta) -> Result<ExperimentTrace, LabError> {
        let signal = signal.into_iter().map(|s| self.detect(s)).collect();
        ExperimentTrace::new(times, signal, meta)
    }

    /// Off-resonant preparation into the repump steady mixture.
    fn prepare<'a>(&self, p: &'a ModelParams) -> Result<Evolution<'a>, LabError> {
        let mut ev = Evolution::new(p, &DensityMatrix::thermal_ground());
        ev.advance(&self.off_resonant(self.repump_power_uw), self.prep_ns)?;
        Ok(ev)
    }
}

fn ground_split(pops: &[f64; 6]) -> (f64, f64) {
    let (a, b) = (pops[Level::GsHalf.index()], pops[Level::GsThreeHalf.index()]);
    (a / (a + b), b / (a + b))
}

/// Short resonant π pulse from the line's ground level, then dark decay.
pub fn es_lifetime_sequence(line: Transition, cal: &Calibration) -> PulseSequence {
    let omega = std::f64::consts::PI / (2.0 * cal.es_pulse_ns);
    PulseSequence::new(InitialState::Level { level: line.ground() })
        .then(PulseSegment::new(DriveConfig::resonant(line, omega, 0.0), cal.es_pulse_ns))
        .then(
            PulseSegment::new(DriveConfig::dark(), cal.es_dark_ns)
                .recorded(Record::TimeResolved { bin_ns: cal.es_bin_ns }),
        )
}

pub fn simulate_es_lifetime(line: Transition, p: &ModelParams, cal: &Calibration) -> Result<ExperimentTrace, LabError> {
    let out = run_sequence(&es_lifetime_sequence(line, cal), p)?;
    let times = out.trace.times.iter().map(|t| t - cal.es_pulse_ns).collect();
    let mut meta = TraceMeta::new("es-lifetime");
    meta.transition = Some(line);
    cal.finish(times, out.trace.signal, meta)
}

/// State after the off-resonant preparation that precedes the resonant
/// decay and spin-pumping experiments.
pub fn prepared_state(p: &ModelParams, cal: &Calibration) -> Result<DensityMatrix, LabError> {
    Ok(cal.prepare(p)?.state())
}

/// PL under continuous resonant drive after off-resonant preparation,
/// sampled over `[0, t_ns]` in `decay_bin_ns` bins.
pub fn simulate_resonant_decay(
    power_nw: f64,
    line: Transition,
    p: &ModelParams,
    t_ns: f64,
    cal: &Calibration,
) -> Result<ExperimentTrace, LabError> {
    resonant_decay_from(&prepared_state(p, cal)?, power_nw, line, p, t_ns, cal)
}

/// [`simulate_resonant_decay`] from an already prepared state.
pub fn resonant_decay_from(
    rho: &DensityMatrix,
    power_nw: f64,
    line: Transition,
    p: &ModelParams,
    t_ns: f64,
    cal: &Calibration,
) -> Result<ExperimentTrace, LabError> {
    let n = (t_ns / cal.decay_bin_ns).round() as usize;
    if n == 0 {
        return Err(LabError::InvalidSequence("decay window shorter than one bin".into()));
    }
    let mut ev = Evolution::new(p, rho);
    let rates = ev.binned(&cal.resonant(line, power_nw), cal.decay_bin_ns, n)?;
    let times = (0..n).map(|k| (k as f64 + 0.5) * cal.decay_bin_ns).collect();
    let mut meta = TraceMeta::new("resonant-decay");
    meta.power_nw = Some(power_nw);
    meta.transition = Some(line);
    cal.finish(times, rates, meta)
}

/// Integrated readout counts against dark delay after a strong off-resonant
/// pump, one curve per readout line.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayedPulse {
    pub o1: ExperimentTrace,
    pub o2: ExperimentTrace,
}

impl DelayedPulse {
    pub fn line(&self, t: Transition) -> &ExperimentTrace {
        match t {
            Transition::O1 => &self.o1,
            Transition::O2 => &self.o2,
        }
    }
}

/// State at the end of the delayed-pulse pump.
pub fn delayed_pumped_state(p: &ModelParams, cal: &Calibration) -> Result<DensityMatrix, LabError> {
    let mut ev = Evolution::new(p, &DensityMatrix::thermal_ground());
    ev.advance(&cal.off_resonant(cal.delayed_pump_power_uw), cal.delayed_pump_ns)?;
    Ok(ev.state())
}

pub fn simulate_delayed_pulse_line(
    delays_ns: &[f64],
    line: Transition,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<ExperimentTrace, LabError> {
    delayed_pulse_from(&delayed_pumped_state(p, cal)?, delays_ns, line, p, cal)
}

/// [`simulate_delayed_pulse_line`] from an already pumped state.
pub fn delayed_pulse_from(
    pumped: &DensityMatrix,
    delays_ns: &[f64],
    line: Transition,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<ExperimentTrace, LabError> {
    if delays_ns.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
        return Err(LabError::InvalidSequence("delays must be finite and non-negative".into()));
    }
    let x0 = pumped.coords();
    let dark = Liouvillian::for_drive(p, &DriveConfig::dark())?;
    let dark_idx = dark.support(&x0);
    let readout = Liouvillian::for_drive(p, &cal.resonant(line, cal.delayed_readout_power_nw))?;
    // Dark evolution never leaves the closure of the pumped state, so one
    // readout propagator serves every delay.
    let mut seed = x0;
    for &i in &dark_idx {
        seed[i] = 1.0;
    }
    let read_idx = readout.support(&seed);
    let window = Propagator::with_integral(&readout, &read_idx, cal.delayed_window_ns)?;
    let integral = window.reduced_integral().expect("integral requested");
    let es: Vec<usize> = read_idx
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == Level::EsHalf.index() || c == Level::EsThreeHalf.index())
        .map(|(k, _)| k)
        .collect();
    let mut counts = Vec::with_capacity(delays_ns.len());
    for &d in delays_ns {
        let x = if d > 0.0 { Propagator::new(&dark, &dark_idx, d)?.apply(&x0) } else { x0 };
        let tr = coords_trace(&x);
        if (tr - 1.0).abs() > 1e-9 {
            return Err(EngineError::IntegrationFailure(format!("population sum drifted to {tr}")).into());
        }
        let y = DVector::from_iterator(read_idx.len(), read_idx.iter().map(|&i| x[i]));
        let excited: f64 = es.iter().map(|&k| integral.row(k).transpose().dot(&y)).sum();
        counts.push((p.rates.gamma_r * excited).max(0.0));
    }
    let mut meta = TraceMeta::new("delayed-pulse");
    meta.power_nw = Some(cal.delayed_readout_power_nw);
    meta.transition = Some(line);
    cal.finish(delays_ns.to_vec(), counts, meta)
}

pub fn simulate_delayed_pulse(delays_ns: &[f64], p: &ModelParams, cal: &Calibration) -> Result<DelayedPulse, LabError> {
    let pumped = delayed_pumped_state(p, cal)?;
    Ok(DelayedPulse {
        o1: delayed_pulse_from(&pumped, delays_ns, Transition::O1, p, cal)?,
        o2: delayed_pulse_from(&pumped, delays_ns, Transition::O2, p, cal)?,
    })
}

/// Ground-state population contrast after one repump duration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContrastPoint {
    pub t_repump_us: f64,
    /// `|p½ − p¾| / (p½ + p¾)`
    pub delta_p: f64,
    /// `(p½ − p¾) / (p½ + p¾)`
    pub signed: f64,
}

/// Resonant initialisation on `init`, relaxation, off-resonant repump of
/// each duration, relaxation, then the ground-state contrast.
pub fn simulate_repump_contrast(
    t_repumps_us: &[f64],
    init: Transition,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<Vec<ContrastPoint>, LabError> {
    let mut ev = cal.prepare(p)?;
    ev.advance(&cal.resonant(init, cal.init_power_nw), cal.init_ns)?;
    ev.advance(&DriveConfig::dark(), cal.relax_ns)?;
    let repump = cal.off_resonant(cal.repump_power_uw);
    t_repumps_us
        .iter()
        .map(|&t| {
            if !(t.is_finite() && t >= 0.0) {
                return Err(LabError::InvalidSequence("repump durations must be non-negative".into()));
            }
            let mut e = ev.clone();
            if t > 0.0 {
                e.advance(&repump, t * 1e3)?;
                e.advance(&DriveConfig::dark(), cal.relax_ns)?;
            }
            let (a, b) = ground_split(&e.populations());
            Ok(ContrastPoint {
                t_repump_us: t,
                delta_p: (a - b).abs(),
                signed: a - b,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinPopulations {
    pub t_us: f64,
    pub p_half: f64,
    pub p_three_half: f64,
}

impl SpinPopulations {
    /// Populations renormalised to the ground-state manifold.
    pub fn ground_normalized(&self) -> (f64, f64) {
        let s = self.p_half + self.p_three_half;
        (self.p_half / s, self.p_three_half / s)
    }
}

/// Ground-state populations after resonant pumping for each time in
/// `times_us` (ascending), starting from the off-resonant preparation.
pub fn spin_pumping_curve(
    times_us: &[f64],
    power_nw: f64,
    line: Transition,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<Vec<SpinPopulations>, LabError> {
    if times_us.windows(2).any(|w| w[1] < w[0]) || times_us.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(LabError::InvalidSequence("pumping times must be ascending and non-negative".into()));
    }
    let mut ev = cal.prepare(p)?;
    let drive = cal.resonant(line, power_nw);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times_us.len());
    for &t in times_us {
        if t > now {
            ev.advance(&drive, (t - now) * 1e3)?;
            now = t;
        }
        let pops = ev.populations();
        out.push(SpinPopulations {
            t_us: t,
            p_half: pops[Level::GsHalf.index()],
            p_three_half: pops[Level::GsThreeHalf.index()],
        });
    }
    Ok(out)
}

pub fn simulate_spin_pumping(
    t_us: f64,
    power_nw: f64,
    line: Transition,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<SpinPopulations, LabError> {
    Ok(spin_pumping_curve(&[t_us], power_nw, line, p, cal)?[0])
}

/// Ground-spin Rabi oscillation read out on `line`: pumping on `line`,
/// a microwave pulse of each duration, then an integrated readout.
pub fn simulate_spin_rabi(
    durations_ns: &[f64],
    line: Transition,
    pump_us: f64,
    p: &ModelParams,
    cal: &Calibration,
) -> Result<ExperimentTrace, LabError> {
    let mut ev = cal.prepare(p)?;
    ev.advance(&cal.resonant(line, cal.init_power_nw), pump_us * 1e3)?;
    let mw = DriveConfig::microwave(cal.mw_rabi_frequency(), 0.0);
    let readout = cal.resonant(line, cal.init_power_nw);
    let mut counts = Vec::with_capacity(durations_ns.len());
    for &d in durations_ns {
        let mut e = ev.clone();
        if d > 0.0 {
            e.advance(&mw, d)?;
        }
        counts.push(e.integrated(&readout, cal.spin_readout_ns, cal.spin_readout_ns)?);
    }
    let mut meta = TraceMeta::new("spin-rabi");
    meta.power_nw = Some(cal.init_power_nw);
    meta.transition = Some(line);
    cal.finish(durations_ns.to_vec(), counts, meta)
}

/// Slowest non-stationary relaxation time of `drive` acting on `rho`,
/// from the eigenvalues of the generator restricted to the reachable
/// coordinates.
pub fn slowest_time_constant(p: &ModelParams, drive: &DriveConfig, rho: &DensityMatrix) -> Result<f64, LabError> {
    let l = Liouvillian::for_drive(p, drive)?;
    let idx = l.support(&rho.coords());
    let ev = l.restrict(&idx).complex_eigenvalues();
    let scale = ev.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    ev.iter()
        .map(|z| -z.re)
        .filter(|&g| g > 1e-12 * scale)
        .min_by(f64::total_cmp)
        .map(|g| 1.0 / g)
        .ok_or_else(|| LabError::InvalidArgument("generator has no decaying mode on this support".into()))
}
