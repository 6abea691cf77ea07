//! Fidelity budgets and Purcell planning for time-bin GHZ and cluster states.

mod budget;
mod protocol;

pub use budget::{
    budget, fidelity_branching, fidelity_excitation, fidelity_phonon, min_purcell,
    optimize_purcell, pi_pulse_duration, purcell_rate, zpl_emission_prob, FidelityBudget,
    FinalGate, MinPurcell, ProtocolConfig, PurcellOptimum, PURCELL_RANGE,
};
pub use protocol::{simulate_ideal_protocol, Bin, ProtocolState, C64, MAX_PHOTONS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GhzError {
    #[error("invalid protocol configuration: {0}")]
    InvalidConfig(String),
    #[error("photon {0} does not occupy exactly one time bin")]
    NotDualRail(usize),
}
