use super::sequence::{PulseSegment, PulseSequence, Record, Step};
use super::trace::{ExperimentTrace, TraceMeta};
use super::LabError;
use crate::engine::{coords_trace, Coords, DensityMatrix, EngineError, Liouvillian, Propagator};
use crate::model::{DriveConfig, Level, ModelParams};

const ES: [usize; 2] = [Level::EsHalf as usize, Level::EsThreeHalf as usize];

/// Output of [`run_sequence`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: ExperimentTrace,
    pub final_state: DensityMatrix,
}

/// State carried through consecutive segments.
#[derive(Debug, Clone)]
pub(crate) struct Evolution<'a> {
    p: &'a ModelParams,
    x: Coords,
}

impl<'a> Evolution<'a> {
    pub(crate) fn new(p: &'a ModelParams, rho: &DensityMatrix) -> Self {
        Evolution { p, x: rho.coords() }
    }

    pub(crate) fn state(&self) -> DensityMatrix {
        DensityMatrix::from_coords(&self.x)
    }

    pub(crate) fn populations(&self) -> [f64; 6] {
        std::array::from_fn(|i| self.x[i])
    }

    fn rate(&self, integral: &Coords, window: f64) -> f64 {
        (self.p.rates.gamma_r * (integral[ES[0]] + integral[ES[1]]) / window).max(0.0)
    }

    fn settle(&mut self) -> Result<(), LabError> {
        let tr = coords_trace(&self.x);
        if (tr - 1.0).abs() > 1e-9 {
            return Err(EngineError::IntegrationFailure(format!("population sum drifted to {tr}")).into());
        }
        self.x = DensityMatrix::from_coords(&self.x).clamp_positive()?.coords();
        Ok(())
    }

    pub(crate) fn advance(&mut self, drive: &DriveConfig, duration: f64) -> Result<(), LabError> {
        let l = Liouvillian::for_drive(self.p, drive)?;
        let idx = l.support(&self.x);
        self.x = Propagator::new(&l, &idx, duration)?.apply(&self.x);
        self.settle()
    }

    /// Mean PL rate in `n` consecutive bins of width `bin`.
    pub(crate) fn binned(&mut self, drive: &DriveConfig, bin: f64, n: usize) -> Result<Vec<f64>, LabError> {
        let l = Liouvillian::for_drive(self.p, drive)?;
        let idx = l.support(&self.x);
        let prop = Propagator::with_integral(&l, &idx, bin)?;
        let n_idx = idx.len();
        // Row-major copy of the step map and the summed excited-state rows
        // of the integral, so each bin is one small matvec plus one dot.
        let map: Vec<f64> = prop.reduced_map().transpose().as_slice().to_vec();
        let integral = prop.reduced_integral().expect("integral requested");
        let mut detect = vec![0.0; n_idx];
        for (k, c) in idx.iter().enumerate() {
            if ES.contains(c) {
                for (j, d) in detect.iter_mut().enumerate() {
                    *d += integral[(k, j)];
                }
            }
        }
        let mut y: Vec<f64> = idx.iter().map(|&i| self.x[i]).collect();
        let mut next = vec![0.0; n_idx];
        let mut out = Vec::with_capacity(n);
        let scale = self.p.rates.gamma_r / bin;
        for _ in 0..n {
            let excited: f64 = detect.iter().zip(&y).map(|(a, b)| a * b).sum();
            out.push((scale * excited).max(0.0));
            for (row, v) in map.chunks_exact(n_idx).zip(next.iter_mut()) {
                *v = row.iter().zip(&y).map(|(a, b)| a * b).sum();
            }
            std::mem::swap(&mut y, &mut next);
        }
        self.x = Coords::zeros();
        for (k, &i) in idx.iter().enumerate() {
            self.x[i] = y[k];
        }
        self.settle()?;
        Ok(out)
    }

    /// PL photons integrated over the first `window` ns of a `duration` ns
    /// segment.
    pub(crate) fn integrated(&mut self, drive: &DriveConfig, window: f64, duration: f64) -> Result<f64, LabError> {
        let l = Liouvillian::for_drive(self.p, drive)?;
        let idx = l.support(&self.x);
        let prop = Propagator::with_integral(&l, &idx, window)?;
        let integral = prop.apply_integral(&self.x).expect("integral requested");
        let counts = self.rate(&integral, 1.0);
        self.x = prop.apply(&self.x);
        let rest = duration - window;
        if rest > 1e-12 * duration {
            self.x = Propagator::new(&l, &idx, rest)?.apply(&self.x);
        }
        self.settle()?;
        Ok(counts)
    }

    pub(crate) fn gate(&mut self, g: &super::MwGate) {
        self.x = g.apply(&DensityMatrix::from_coords(&self.x)).coords();
    }

    fn segment(&mut self, seg: &PulseSegment, clock: f64, out: &mut Vec<(f64, f64)>) -> Result<(), LabError> {
        match seg.record {
            Record::None => self.advance(&seg.drive, seg.duration_ns),
            Record::TimeResolved { bin_ns } => {
                let n = (seg.duration_ns / bin_ns).round() as usize;
                let rates = self.binned(&seg.drive, bin_ns, n)?;
                out.extend(
                    rates
                        .into_iter()
                        .enumerate()
                        .map(|(k, v)| (clock + (k as f64 + 0.5) * bin_ns, v)),
                );
                Ok(())
            }
            Record::Integrated { window_ns } => {
                let c = self.integrated(&seg.drive, window_ns, seg.duration_ns)?;
                out.push((clock, c));
                Ok(())
            }
        }
    }
}

/// Runs a pulse sequence and returns the recorded PL (unit collection
/// scale) and the final state.
pub fn run_sequence(seq: &PulseSequence, p: &ModelParams) -> Result<RunOutput, LabError> {
    seq.validate()?;
    p.validate()?;
    let mut ev = Evolution::new(p, &seq.initial.density_matrix()?);
    let mut acc: Vec<(f64, f64)> = Vec::new();
    for rep in 0..seq.repetitions {
        let mut clock = 0.0;
        let mut samples = Vec::new();
        for step in &seq.steps {
            match step {
                Step::Segment(seg) => {
                    ev.segment(seg, clock, &mut samples)?;
                    clock += seg.duration_ns;
                }
                Step::IdealMw(g) => ev.gate(g),
            }
        }
        if rep == 0 {
            acc = samples;
        } else {
            for (a, s) in acc.iter_mut().zip(samples) {
                a.1 += s.1;
            }
        }
    }
    let reps = f64::from(seq.repetitions);
    let (times, signal) = acc.into_iter().map(|(t, s)| (t, s / reps)).unzip();
    let trace = ExperimentTrace::new(times, signal, TraceMeta::new("sequence"))?;
    Ok(RunOutput {
        trace,
        final_state: ev.state(),
    })
}
