use std::path::Path;

use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::engine::{DensityMatrix, C64};
use crate::model::{DriveConfig, Level};

/// What a segment contributes to the output trace.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Record {
    #[default]
    None,
    /// Mean PL rate in consecutive bins, stamped at the bin centres.
    TimeResolved { bin_ns: f64 },
    /// PL integrated over the first `window_ns` of the segment, stamped at
    /// the segment start.
    Integrated { window_ns: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSegment {
    #[serde(default)]
    pub drive: DriveConfig,
    pub duration_ns: f64,
    #[serde(default)]
    pub record: Record,
}

impl PulseSegment {
    pub fn new(drive: DriveConfig, duration_ns: f64) -> Self {
        PulseSegment {
            drive,
            duration_ns,
            record: Record::None,
        }
    }

    pub fn recorded(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if !(self.duration_ns.is_finite() && self.duration_ns > 0.0) {
            return Err(LabError::InvalidSequence(format!(
                "segment duration must be positive, got {}",
                self.duration_ns
            )));
        }
        self.drive
            .validate()
            .map_err(|e| LabError::InvalidSequence(e.to_string()))?;
        match self.record {
            Record::None => Ok(()),
            Record::TimeResolved { bin_ns } => {
                if !(bin_ns.is_finite() && bin_ns > 0.0) {
                    return Err(LabError::InvalidSequence("bin_ns must be positive".into()));
                }
                let n = self.duration_ns / bin_ns;
                if (n - n.round()).abs() > 1e-6 * n.max(1.0) || n.round() < 1.0 {
                    return Err(LabError::InvalidSequence(format!(
                        "duration {} ns is not a whole number of {bin_ns} ns bins",
                        self.duration_ns
                    )));
                }
                Ok(())
            }
            Record::Integrated { window_ns } => {
                if !(window_ns.is_finite() && window_ns > 0.0) {
                    return Err(LabError::InvalidSequence("window_ns must be positive".into()));
                }
                if window_ns > self.duration_ns * (1.0 + 1e-12) {
                    return Err(LabError::InvalidSequence(
                        "integration window longer than its segment".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Instantaneous microwave rotation of the ground-state spin,
/// `exp(−i θ/2 (cos φ σx + sin φ σy))` on (GS½, GS³).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MwGate {
    pub angle_rad: f64,
    #[serde(default)]
    pub phase_rad: f64,
}

impl MwGate {
    pub fn pi() -> Self {
        MwGate {
            angle_rad: std::f64::consts::PI,
            phase_rad: 0.0,
        }
    }

    pub fn half_pi() -> Self {
        MwGate {
            angle_rad: std::f64::consts::FRAC_PI_2,
            phase_rad: 0.0,
        }
    }

    pub fn unitary(&self) -> Matrix6<C64> {
        let (g1, g3) = (Level::GsHalf.index(), Level::GsThreeHalf.index());
        let (c, s) = ((self.angle_rad / 2.0).cos(), (self.angle_rad / 2.0).sin());
        let mut u = Matrix6::<C64>::identity();
        u[(g1, g1)] = C64::new(c, 0.0);
        u[(g3, g3)] = C64::new(c, 0.0);
        // −i s (cos φ − i sin φ) and −i s (cos φ + i sin φ)
        u[(g1, g3)] = C64::new(0.0, -s) * C64::from_polar(1.0, -self.phase_rad);
        u[(g3, g1)] = C64::new(0.0, -s) * C64::from_polar(1.0, self.phase_rad);
        u
    }

    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        let u = self.unitary();
        DensityMatrix::from_coords(&crate::engine::to_coords(&(u * rho.matrix() * u.adjoint())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Step {
    Segment(PulseSegment),
    IdealMw(MwGate),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// Equal mixture of GS½ and GS³.
    #[default]
    ThermalGround,
    Level { level: Level },
    Explicit { re: [[f64; 6]; 6], im: [[f64; 6]; 6] },
}

impl InitialState {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        InitialState::Explicit {
            re: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].re)),
            im: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].im)),
        }
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix, LabError> {
        Ok(match self {
            InitialState::ThermalGround => DensityMatrix::thermal_ground(),
            InitialState::Level { level } => DensityMatrix::pure(*level),
            InitialState::Explicit { re, im } => {
                let m = Matrix6::from_fn(|i, j| C64::new(re[i][j], im[i][j]));
                DensityMatrix::new(m)?
            }
        })
    }
}

/// Ordered steps applied `repetitions` times back to back. The state carries
/// over between repetitions and recorded samples are averaged over them,
/// as a photon-counting histogram would be.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseSequence {
    #[serde(default)]
    pub initial: InitialState,
    pub steps: Vec<Step>,
    #[serde(default = "one")]
    pub repetitions: u32,
}

fn one() -> u32 {
    1
}

impl PulseSequence {
    pub fn new(initial: InitialState) -> Self {
        PulseSequence {
            initial,
            steps: Vec::new(),
            repetitions: 1,
        }
    }

    pub fn then(mut self, seg: PulseSegment) -> Self {
        self.steps.push(Step::Segment(seg));
        self
    }

    pub fn then_mw(mut self, gate: MwGate) -> Self {
        self.steps.push(Step::IdealMw(gate));
        self
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.steps.is_empty() {
            return Err(LabError::InvalidSequence("sequence has no steps".into()));
        }
        if self.repetitions == 0 {
            return Err(LabError::InvalidSequence("repetitions must be at least 1".into()));
        }
        self.initial.density_matrix()?;
        for s in &self.steps {
            match s {
                Step::Segment(seg) => seg.validate()?,
                Step::IdealMw(g) => {
                    if !(g.angle_rad.is_finite() && g.phase_rad.is_finite()) {
                        return Err(LabError::InvalidSequence("non-finite MW gate".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, LabError> {
        let seq: PulseSequence =
            serde_json::from_str(s).map_err(|e| LabError::InvalidSequence(e.to_string()))?;
        seq.validate()?;
        Ok(seq)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LabError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path)
            .map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sequence serializes")
    }
}
