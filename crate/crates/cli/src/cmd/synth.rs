use std::path::PathBuf;

use clap::Args;
use vsi_core::fit::{synthesize, DatasetKind, FitManifest, LifetimeConstraint, ManifestEntry, SynthSpec};
use vsi_core::model::{ModelFile, Transition};

use super::{inputs, save_trace, write_text};
use crate::error::CliError;
use crate::units::{duration_list_ns, duration_ns, number_list, NsList, NumberList};
use crate::ModelArgs;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory (created if needed).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Resonant-decay powers in nW.
    #[arg(long, default_value = "6,10,15,20", value_parser = number_list)]
    pub powers: NumberList,
    /// Expected counts in the brightest bin of every trace.
    #[arg(long, default_value_t = 1e4)]
    pub peak_counts: f64,
    #[arg(long)]
    pub seed: u64,
    /// Length of each resonant-decay record.
    #[arg(long, default_value = "20us", value_parser = duration_ns)]
    pub duration: f64,
    /// Delayed-pulse delays; 20 log-spaced values from 50 ns by default.
    #[arg(long, value_parser = duration_list_ns)]
    pub delays: Option<NsList>,
    /// Power anchoring the deshelving law in the manifest.
    #[arg(long, default_value_t = 20.0)]
    pub reference_power: f64,
}

fn file_name(kind: &DatasetKind) -> String {
    match kind {
        DatasetKind::ResonantDecay { power_nw, transition } => format!("decay_{power_nw}nW_{transition}.csv"),
        DatasetKind::DelayedPulse { transition } => format!("delayed_{transition}.csv"),
    }
}

pub fn run(a: SynthArgs) -> Result<(), CliError> {
    if !(a.peak_counts.is_finite() && a.peak_counts > 0.0) {
        return Err(CliError::Config(format!("peak-counts: must be positive, got {}", a.peak_counts)));
    }
    if a.powers.is_empty() || a.powers.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(CliError::Config("powers: need at least one positive power".into()));
    }
    if !a.powers.iter().any(|p| (p - a.reference_power).abs() < 1e-9) {
        return Err(CliError::Config(format!(
            "reference-power: {} nW is not among the synthesised powers",
            a.reference_power
        )));
    }
    let (p, cal) = inputs(&a.model)?;
    let spec = SynthSpec {
        powers_nw: a.powers.clone(),
        transitions: vec![Transition::O1, Transition::O2],
        decay_ns: a.duration,
        delays_ns: a.delays.clone().unwrap_or_else(vsi_core::fit::default_delays),
        peak_counts: Some(a.peak_counts),
    };
    let datasets = synthesize(&p, &cal, &spec, a.seed)?;
    let mut entries = Vec::with_capacity(datasets.len());
    for d in &datasets {
        let name = file_name(&d.kind);
        save_trace(&d.trace, &a.out.join(&name))?;
        entries.push(ManifestEntry {
            trace_csv: name.into(),
            kind: d.kind,
        });
    }
    let manifest = FitManifest {
        datasets: entries,
        constraints: LifetimeConstraint::from_rates(&p.rates),
        bounds: Default::default(),
        calibration: cal,
        variant: Default::default(),
        reference_power_nw: a.reference_power,
        restarts: 3,
        seed: a.seed,
    };
    write_text(&a.out.join("manifest.json"), &(manifest.to_json_string() + "\n"))?;
    write_text(&a.out.join("truth.json"), &(ModelFile::from_params(&p).to_json_string() + "\n"))?;
    println!("wrote {} traces and manifest.json to {}", datasets.len(), a.out.display());
    Ok(())
}
