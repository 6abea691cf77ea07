use std::path::Path;

use vsi_core::lab::{Calibration, ExperimentTrace};
use vsi_core::model::{ModelFile, ModelParams};

use crate::error::CliError;
use crate::ModelArgs;

pub mod fit;
pub mod protocol;
pub mod simulate;
pub mod synth;

pub fn load_model(path: Option<&Path>) -> Result<ModelParams, CliError> {
    match path {
        None => Ok(ModelParams::reference()),
        Some(p) => {
            if !p.exists() {
                return Err(CliError::Config(format!("model: {} does not exist", p.display())));
            }
            Ok(ModelFile::load(p)?.to_params()?)
        }
    }
}

pub fn load_calibration(path: Option<&Path>) -> Result<Calibration, CliError> {
    match path {
        None => Ok(Calibration::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("calibration {}: {e}", p.display())))
        }
    }
}

pub fn inputs(a: &ModelArgs) -> Result<(ModelParams, Calibration), CliError> {
    Ok((load_model(a.model.as_deref())?, load_calibration(a.calibration.as_deref())?))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn save_trace(trace: &ExperimentTrace, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(trace.save(path)?)
}

/// `dir/name.csv` → `dir/name_{suffix}.csv`
pub fn with_suffix(path: &Path, suffix: &str) -> std::path::PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}
