//! Pulse sequences over the engine, the simulated experiments, trace fits
//! and synthetic shot noise.

mod experiments;
mod fitting;
mod noise;
mod run;
mod sequence;
mod trace;

pub use experiments::{
    delayed_pulse_from, delayed_pumped_state, es_lifetime_sequence, prepared_state, resonant_decay_from, simulate_delayed_pulse, simulate_delayed_pulse_line, simulate_es_lifetime,
    simulate_repump_contrast, simulate_resonant_decay, simulate_spin_pumping, simulate_spin_rabi,
    slowest_time_constant, spin_pumping_curve, Calibration, ContrastPoint, DelayedPulse, SpinPopulations,
};
pub use fitting::{fit_rabi_fringe, fit_single_exponential, tail_time_constant, ExpFit, RabiFit};
pub use noise::add_shot_noise;
pub use run::{run_sequence, RunOutput};
pub use sequence::{InitialState, MwGate, PulseSegment, PulseSequence, Record, Step};
pub use trace::{ExperimentTrace, TraceMeta};

use thiserror::Error;

use crate::engine::EngineError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("fit did not converge: {0}")]
    FitDiverged(String),
    #[error("trace spans only {periods:.2} oscillation periods (need 1.5)")]
    InsufficientSpan { periods: f64 },
    #[error("fit needs at least {need} samples, got {n}")]
    InsufficientSamples { n: usize, need: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
