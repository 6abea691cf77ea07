//! Spin-optical dynamics of the V2 silicon vacancy in 4H-SiC.
//!
//! * [`model`]: level basis, rates, drives and closed-form derived quantities.
//! * [`engine`]: rotating-frame Hamiltonian, Lindblad generator and propagation.
//! * [`lab`]: pulse sequences, simulated experiments, trace fits and shot noise.
//! * [`fit`]: Nelder-Mead, differential evolution and the joint rate fit.
//! * [`ghz`]: GHZ/cluster fidelity budget, Purcell optimisation and an ideal
//!   state-vector model of the emission protocol.
//!
//! The closed-form algebra and optimizers are generic over [`Real`]; the
//! aliases below fix the scalar to `f64`.

pub mod engine;
pub mod fit;
pub mod ghz;
pub mod lab;
pub mod model;
pub mod scalar;

pub use scalar::Real;

pub type Rates = model::RateSet<f64>;
