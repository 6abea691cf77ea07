//! Effective six-level description of the V2 centre: level basis, transition
//! rates, drive settings and the closed-form quantities derived from them.
//!
//! Units are fixed across the crate: time in ns, rates in ns⁻¹, angular
//! frequencies in rad/ns and optical power in nW.

mod derived;
mod drive;
mod file;
mod level;
mod params;
mod rates;

pub use derived::{
    branching_preference, cooperativity, es_lifetime, ms_lifetime, quantum_efficiency,
};
pub use drive::{DriveConfig, ResonantTarget};
pub use file::{LifetimesNs, ModelFile, Ms2OverrideEntry};
pub use level::{Level, Metastable, Transition};
pub use params::{ModelParams, Ms2Override};
pub use rates::RateSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("rate `{0}` must be strictly positive")]
    NonPositiveRate(&'static str),
    #[error("rate `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("MS2 outgoing rates must be equal (gamma_3p = {gamma_3p}, gamma_4p = {gamma_4p})")]
    AsymmetricMs2Rates { gamma_3p: f64, gamma_4p: f64 },
    #[error("drive field `{0}` must be finite and non-negative")]
    InvalidDrive(&'static str),
    #[error("a resonant target and an off-resonant pump cannot be active in the same segment")]
    ConflictingDrives,
    #[error("model file: {0}")]
    File(String),
}

/// Converts a frequency in MHz to an angular frequency in rad/ns.
pub fn mhz_to_rad_per_ns(mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * mhz * 1e-3
}

/// Inverse of [`mhz_to_rad_per_ns`].
pub fn rad_per_ns_to_mhz(w: f64) -> f64 {
    w / (2.0 * std::f64::consts::PI * 1e-3)
}
