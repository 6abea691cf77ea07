//! Optimizers and the joint rate fit.

mod joint;
mod optim;
mod powers;
mod problem;
mod synth;

pub use joint::{
    dataset_loss, dataset_residuals, joint_fit, joint_fit_with, objective, simulate_dataset, DatasetResidual,
    FitResult, FittedParameter, JointOptions, Layout, ParamSpec, RestartDiagnostics, CONSTRAINT_PENALTY,
    WEIGHT_FLOOR,
};
pub use optim::{differential_evolution, nelder_mead, DeOptions, NelderMeadOptions, OptimResult, Termination};
pub use powers::{infer_powers, InferredPower};
pub use synth::{default_delays, synthesize, SynthSpec};
pub use problem::{
    Dataset, DatasetKind, FitBounds, FitManifest, FitProblem, LifetimeConstraint, ManifestEntry, MsVariant,
};

use thiserror::Error;

use crate::lab::LabError;

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("invalid fit problem: {0}")]
    InvalidProblem(String),
    #[error("constraints cannot be met within the bounds: {0}")]
    Infeasible(String),
    #[error("fitted MS2 rates do not increase with power")]
    NonMonotonicRates,
    #[error("i/o: {0}")]
    Io(String),
}
