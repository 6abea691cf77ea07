//! Fit problems: datasets, lifetime constraints, parameter bounds and the
//! manifest file that ties them to trace CSVs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FitError;
use crate::lab::{Calibration, ExperimentTrace};
use crate::model::{ModelParams, RateSet, Transition};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum DatasetKind {
    ResonantDecay {
        #[serde(rename = "power_nW")]
        power_nw: f64,
        transition: Transition,
    },
    DelayedPulse {
        transition: Transition,
    },
}

impl DatasetKind {
    pub fn label(&self) -> String {
        match self {
            DatasetKind::ResonantDecay { power_nw, transition } => format!("decay-{power_nw}nW-{}", transition.as_str()),
            DatasetKind::DelayedPulse { transition } => format!("delayed-{}", transition.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub trace: ExperimentTrace,
}

/// Measured excited-state lifetimes the recovered rates must reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeConstraint {
    #[serde(rename = "es_lifetime_O1_ns")]
    pub tau_o1_ns: f64,
    #[serde(rename = "es_lifetime_O2_ns")]
    pub tau_o2_ns: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    0.01
}

impl LifetimeConstraint {
    pub fn from_rates(r: &RateSet<f64>) -> Self {
        LifetimeConstraint {
            tau_o1_ns: 1.0 / (r.gamma_r + r.gamma_1 + r.gamma_1p),
            tau_o2_ns: 1.0 / (r.gamma_r + r.gamma_2 + r.gamma_2p),
            tolerance: default_tolerance(),
        }
    }

    /// Largest relative lifetime mismatch of `r`.
    pub fn violation(&self, r: &RateSet<f64>) -> f64 {
        let c = Self::from_rates(r);
        (c.tau_o1_ns / self.tau_o1_ns - 1.0)
            .abs()
            .max((c.tau_o2_ns / self.tau_o2_ns - 1.0).abs())
    }
}

/// Rate bounds in ns⁻¹ (searched in log space) and bounds on the fraction
/// of the non-radiative excited-state decay that goes to MS1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBounds {
    pub gamma_r: (f64, f64),
    pub ms1_share_o1: (f64, f64),
    pub ms1_share_o2: (f64, f64),
    pub gamma_3: (f64, f64),
    pub gamma_4: (f64, f64),
    pub gamma_3p_intrinsic: (f64, f64),
    pub gamma_3p_power: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            gamma_r: (0.005, 1.0),
            ms1_share_o1: (0.01, 0.99),
            ms1_share_o2: (0.01, 0.99),
            gamma_3: (2e-5, 0.05),
            gamma_4: (2e-5, 0.05),
            gamma_3p_intrinsic: (2e-5, 0.05),
            gamma_3p_power: (2e-5, 0.05),
        }
    }
}

impl FitBounds {
    pub fn validate(&self) -> Result<(), FitError> {
        let rates = [
            ("gamma_r", self.gamma_r),
            ("gamma_3", self.gamma_3),
            ("gamma_4", self.gamma_4),
            ("gamma_3p_intrinsic", self.gamma_3p_intrinsic),
            ("gamma_3p_power", self.gamma_3p_power),
        ];
        for (name, (lo, hi)) in rates {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(FitError::InvalidProblem(format!(
                    "bounds.{name} must satisfy 0 < min <= max, got [{lo}, {hi}]"
                )));
            }
        }
        for (name, (lo, hi)) in [("ms1_share_o1", self.ms1_share_o1), ("ms1_share_o2", self.ms1_share_o2)] {
            if !(lo.is_finite() && hi.is_finite() && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi) {
                return Err(FitError::InvalidProblem(format!(
                    "bounds.{name} must satisfy 0 <= min <= max <= 1, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }
}

/// Number of metastable doublets in the fitted level scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MsVariant {
    #[default]
    TwoMs,
    /// MS2 disconnected (γ₁′ = γ₂′ = 0), for the minimal-scheme comparison.
    OneMs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitProblem {
    pub datasets: Vec<Dataset>,
    pub constraint: LifetimeConstraint,
    pub bounds: FitBounds,
    pub calibration: Calibration,
    pub variant: MsVariant,
    /// Power at which the deshelving law is anchored.
    pub reference_power_nw: f64,
    /// Level structure (splittings, dephasing) used for every simulation.
    pub base: ModelParams,
    pub restarts: usize,
}

impl FitProblem {
    pub fn new(datasets: Vec<Dataset>, constraint: LifetimeConstraint) -> Self {
        FitProblem {
            datasets,
            constraint,
            bounds: FitBounds::default(),
            calibration: Calibration::default(),
            variant: MsVariant::TwoMs,
            reference_power_nw: 20.0,
            base: ModelParams::reference(),
            restarts: 3,
        }
    }

    /// Distinct resonant-decay powers, ascending.
    pub fn decay_powers(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self
            .datasets
            .iter()
            .filter_map(|d| match d.kind {
                DatasetKind::ResonantDecay { power_nw, .. } => Some(power_nw),
                DatasetKind::DelayedPulse { .. } => None,
            })
            .collect();
        p.sort_by(f64::total_cmp);
        p.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
        p
    }

    pub fn validate(&self) -> Result<(), FitError> {
        if self.datasets.is_empty() {
            return Err(FitError::InvalidProblem("no datasets".into()));
        }
        self.bounds.validate()?;
        let c = &self.constraint;
        if !(c.tau_o1_ns > 0.0 && c.tau_o2_ns > 0.0 && c.tau_o1_ns.is_finite() && c.tau_o2_ns.is_finite()) {
            return Err(FitError::InvalidProblem("constraint lifetimes must be positive".into()));
        }
        if !(c.tolerance > 0.0 && c.tolerance < 1.0) {
            return Err(FitError::InvalidProblem("constraint tolerance must lie in (0, 1)".into()));
        }
        if !(self.reference_power_nw.is_finite() && self.reference_power_nw > 0.0) {
            return Err(FitError::InvalidProblem("reference_power_nW must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(FitError::InvalidProblem("restarts must be at least 1".into()));
        }
        let ceiling = (1.0 / c.tau_o1_ns).min(1.0 / c.tau_o2_ns);
        if self.bounds.gamma_r.0 >= ceiling {
            return Err(FitError::Infeasible(format!(
                "gamma_r lower bound {} already exceeds the total decay rate {ceiling} allowed by the lifetimes",
                self.bounds.gamma_r.0
            )));
        }
        for d in &self.datasets {
            d.trace.validate()?;
            if d.trace.len() < 2 {
                return Err(FitError::InvalidProblem(format!("dataset {} has fewer than 2 samples", d.kind.label())));
            }
            if let DatasetKind::ResonantDecay { power_nw, .. } = d.kind {
                if !(power_nw.is_finite() && power_nw > 0.0) {
                    return Err(FitError::InvalidProblem("decay power must be positive".into()));
                }
                let bin = d.trace.times[1] - d.trace.times[0];
                let regular = d
                    .trace
                    .times
                    .iter()
                    .enumerate()
                    .all(|(k, &t)| (t - (k as f64 + 0.5) * bin).abs() <= 1e-6 * bin);
                if !regular {
                    return Err(FitError::InvalidProblem(format!(
                        "dataset {} must be sampled at bin centres from t = 0",
                        d.kind.label()
                    )));
                }
            }
        }
        Ok(())
    }
}

// No deny_unknown_fields here: serde rejects every key of a flattened
// enum under it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub trace_csv: PathBuf,
    #[serde(flatten)]
    pub kind: DatasetKind,
}

/// On-disk description of a fit. Trace paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitManifest {
    pub datasets: Vec<ManifestEntry>,
    pub constraints: LifetimeConstraint,
    #[serde(default)]
    pub bounds: FitBounds,
    #[serde(default)]
    pub calibration: Calibration,
    #[serde(default)]
    pub variant: MsVariant,
    #[serde(rename = "reference_power_nW", default = "default_reference")]
    pub reference_power_nw: f64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    pub seed: u64,
}

fn default_reference() -> f64 {
    20.0
}

fn default_restarts() -> usize {
    3
}

impl FitManifest {
    pub fn from_json_str(s: &str) -> Result<Self, FitError> {
        serde_json::from_str(s).map_err(|e| FitError::InvalidProblem(format!("manifest: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, FitError> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| FitError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises")
    }

    /// Reads every trace (relative to `dir`) and builds the problem.
    pub fn problem(&self, dir: &Path) -> Result<FitProblem, FitError> {
        let mut datasets = Vec::with_capacity(self.datasets.len());
        for e in &self.datasets {
            let path = dir.join(&e.trace_csv);
            let trace = ExperimentTrace::load(&path)?;
            datasets.push(Dataset { kind: e.kind, trace });
        }
        let mut p = FitProblem::new(datasets, self.constraints);
        p.bounds = self.bounds;
        p.calibration = self.calibration.clone();
        p.variant = self.variant;
        p.reference_power_nw = self.reference_power_nw;
        p.restarts = self.restarts;
        p.validate()?;
        Ok(p)
    }
}
