use vsi_core::fit::FitError;
use vsi_core::ghz::GhzError;
use vsi_core::lab::LabError;
use vsi_core::model::ModelError;

/// Failure classes mapped onto exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("fit infeasible: {0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Simulation(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Model(e) => e.into(),
            LabError::InvalidSequence(_)
            | LabError::InvalidTrace(_)
            | LabError::Io(_)
            | LabError::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Simulation(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::Lab(e) => e.into(),
            FitError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            FitError::NonMonotonicRates => CliError::Simulation(e.to_string()),
            FitError::InvalidProblem(_) | FitError::Io(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<GhzError> for CliError {
    fn from(e: GhzError) -> Self {
        CliError::Config(e.to_string())
    }
}
