//! Master-equation engine: rotating-frame Hamiltonian, Lindblad generator,
//! propagation through constant segments and stationary states.

mod basis;
mod density;
mod hamiltonian;
mod liouvillian;
mod propagate;
mod rk;
mod steady;

pub use basis::{coords_trace, from_coords, to_coords, Coords, C64, DIM, N_LEVELS};
pub use density::{DensityMatrix, HERMITICITY_TOL, NEGATIVITY_TOL, TRACE_TOL};
pub use hamiltonian::{build_hamiltonian, Hamiltonian};
pub use liouvillian::{build_liouvillian, jump_operators, Jump, JumpKind, Liouvillian};
pub use propagate::{evolve, Propagator};
pub use rk::{evolve_rk, evolve_rk_with, RkOptions};
pub use steady::steady_state;

use thiserror::Error;

use crate::model::{Level, ModelError, RateSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("a resonant target and an off-resonant pump cannot be active in the same segment")]
    ConflictingDrives,
    #[error("integration failed: {0}")]
    IntegrationFailure(String),
    #[error("stationary subspace has dimension {dimension}")]
    DegenerateKernel { dimension: usize },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid duration {0} ns")]
    InvalidDuration(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Photoluminescence rate `γ_r (ρ_ES½ + ρ_ES³)` with unit collection scale.
pub fn pl_signal(rho: &DensityMatrix, r: &RateSet<f64>) -> f64 {
    r.gamma_r * excited_population(rho)
}

pub fn excited_population(rho: &DensityMatrix) -> f64 {
    rho.population(Level::EsHalf) + rho.population(Level::EsThreeHalf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_cases() {
        let r = RateSet::reference();
        assert_eq!(pl_signal(&DensityMatrix::thermal_ground(), &r), 0.0);
        assert_eq!(
            pl_signal(&DensityMatrix::pure(Level::EsHalf), &r),
            r.gamma_r
        );
        let mix = DensityMatrix::from_populations([0.0, 0.0, 0.5, 0.5, 0.0, 0.0]).unwrap();
        assert!((pl_signal(&mix, &r) - r.gamma_r).abs() < 1e-15);
    }
}
