use serde::{Deserialize, Serialize};

use super::{ModelError, Transition};

/// Which optical line carries the coherent laser coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResonantTarget {
    #[default]
    None,
    O1,
    O2,
    /// Both lines driven by one laser whose detuning is referenced to O1.
    /// Kept for completeness; experiments address one line at a time.
    Both,
}

impl From<Transition> for ResonantTarget {
    fn from(t: Transition) -> Self {
        match t {
            Transition::O1 => ResonantTarget::O1,
            Transition::O2 => ResonantTarget::O2,
        }
    }
}

/// Piecewise-constant drive applied during one pulse segment.
///
/// `omega_l` and `omega_mw` are the matrix elements of the coupling terms
/// (rad/ns), so a resonant two-level population oscillates as
/// `sin²(omega · t)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveConfig {
    pub omega_l: f64,
    /// Laser detuning from the targeted line, rad/ns.
    pub delta_l: f64,
    pub target: ResonantTarget,
    /// Incoherent off-resonant pump rate on both GS→ES transitions, ns⁻¹.
    pub w_offres: f64,
    pub omega_mw: f64,
    /// Microwave detuning from the ground-state splitting, rad/ns.
    pub delta_mw: f64,
    /// Optical power entering the MS2 deshelving law, nW.
    pub power_nw: f64,
}

impl DriveConfig {
    pub fn dark() -> Self {
        Self::default()
    }

    pub fn resonant(line: Transition, omega_l: f64, power_nw: f64) -> Self {
        DriveConfig {
            omega_l,
            target: line.into(),
            power_nw,
            ..Self::default()
        }
    }

    pub fn off_resonant(w_offres: f64, power_nw: f64) -> Self {
        DriveConfig {
            w_offres,
            power_nw,
            ..Self::default()
        }
    }

    pub fn microwave(omega_mw: f64, delta_mw: f64) -> Self {
        DriveConfig {
            omega_mw,
            delta_mw,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let nonneg = [
            ("omega_l", self.omega_l),
            ("w_offres", self.w_offres),
            ("omega_mw", self.omega_mw),
            ("power_nw", self.power_nw),
        ];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidDrive(name));
            }
        }
        for (name, v) in [("delta_l", self.delta_l), ("delta_mw", self.delta_mw)] {
            if !v.is_finite() {
                return Err(ModelError::InvalidDrive(name));
            }
        }
        if self.target != ResonantTarget::None && self.w_offres > 0.0 {
            return Err(ModelError::ConflictingDrives);
        }
        Ok(())
    }
}
