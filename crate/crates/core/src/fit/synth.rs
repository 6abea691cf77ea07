//! Synthetic versions of the joint-fit datasets.

use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetKind};
use crate::lab::{add_shot_noise, simulate_delayed_pulse, simulate_resonant_decay, Calibration, LabError};
use crate::model::{ModelParams, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    #[serde(rename = "powers_nW")]
    pub powers_nw: Vec<f64>,
    pub transitions: Vec<Transition>,
    pub decay_ns: f64,
    pub delays_ns: Vec<f64>,
    /// Expected counts in the brightest sample of each trace; `None` keeps
    /// the noiseless signal.
    pub peak_counts: Option<f64>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            powers_nw: vec![6.0, 10.0, 15.0, 20.0],
            transitions: vec![Transition::O1, Transition::O2],
            decay_ns: 20_000.0,
            delays_ns: default_delays(),
            peak_counts: Some(1e4),
        }
    }
}

/// 20 delays from 50 ns to about 58 µs, evenly spaced in log.
pub fn default_delays() -> Vec<f64> {
    (0..20).map(|k| 50.0 * 1.45f64.powi(k)).collect()
}

fn noise_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Resonant decays for every power and line, then one delayed-pulse trace
/// per line. Each trace gets its own noise stream derived from `seed`.
pub fn synthesize(p: &ModelParams, cal: &Calibration, spec: &SynthSpec, seed: u64) -> Result<Vec<Dataset>, LabError> {
    let mut out = Vec::new();
    for &power_nw in &spec.powers_nw {
        for &transition in &spec.transitions {
            out.push(Dataset {
                kind: DatasetKind::ResonantDecay { power_nw, transition },
                trace: simulate_resonant_decay(power_nw, transition, p, spec.decay_ns, cal)?,
            });
        }
    }
    if !spec.delays_ns.is_empty() {
        let d = simulate_delayed_pulse(&spec.delays_ns, p, cal)?;
        for (transition, trace) in [(Transition::O1, d.o1), (Transition::O2, d.o2)] {
            if spec.transitions.contains(&transition) {
                out.push(Dataset {
                    kind: DatasetKind::DelayedPulse { transition },
                    trace,
                });
            }
        }
    }
    if let Some(peak) = spec.peak_counts {
        for (k, d) in out.iter_mut().enumerate() {
            d.trace = add_shot_noise(&d.trace, peak, noise_seed(seed, k))?;
        }
    }
    Ok(out)
}
