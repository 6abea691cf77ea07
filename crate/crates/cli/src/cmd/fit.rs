use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use vsi_core::fit::{
    infer_powers, joint_fit_with, simulate_dataset, DatasetKind, FitManifest, FitResult, InferredPower, JointOptions,
};
use vsi_core::model::{es_lifetime, ModelFile, ModelParams, Transition};

use super::{write_text, with_suffix};
use crate::error::CliError;
use crate::svg::{line_chart, Series};

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Fit manifest JSON; trace paths are relative to it.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Output directory for rates.json, diagnostics.json and residual CSVs.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the manifest restart count.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Differential-evolution generation budget per restart.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Skip the curvature-based uncertainty estimate.
    #[arg(long)]
    pub no_uncertainties: bool,
    /// SVG overlay of observed and fitted resonant decays.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

#[derive(Serialize)]
struct Diagnostics<'a> {
    #[serde(flatten)]
    fit: &'a FitResult,
    inferred_powers: Option<Vec<InferredPower>>,
}

fn rate_table(p: &ModelParams, inferred: Option<&[InferredPower]>, powers: &[f64]) -> String {
    let r = &p.rates;
    let mut s = String::new();
    let _ = writeln!(s, "{:<34}{:>14}", "Transition", "Lifetime (ns)");
    for (name, rate) in [
        ("ES -> GS radiative (1/γ_r)", r.gamma_r),
        ("ES½ -> MS1 (1/γ₁)", r.gamma_1),
        ("ES½ -> MS2 (1/γ₁′)", r.gamma_1p),
        ("ES³ -> MS1 (1/γ₂)", r.gamma_2),
        ("ES³ -> MS2 (1/γ₂′)", r.gamma_2p),
        ("MS1 -> GS½ (1/γ₃)", r.gamma_3),
        ("MS1 -> GS³ (1/γ₄)", r.gamma_4),
        ("MS2 -> GS intrinsic (1/γ₃′=1/γ₄′)", r.gamma_3p),
    ] {
        let _ = writeln!(s, "{name:<34}{:>14.2}", 1.0 / rate);
    }
    let _ = writeln!(s, "\n{:<12}{:>16}{:>20}", "Power (nW)", "1/γ₃′ (ns)", "Inferred power (nW)");
    for &pw in powers {
        let inf = inferred
            .and_then(|v| v.iter().find(|i| (i.nominal_nw - pw).abs() < 1e-9))
            .map_or("-".to_string(), |i| format!("{:.2}", i.inferred_nw));
        let _ = writeln!(s, "{pw:<12}{:>16.2}{inf:>20}", 1.0 / p.ms2_rate_at(pw));
    }
    let _ = writeln!(
        s,
        "\nES lifetimes: O1 {:.3} ns, O2 {:.3} ns",
        es_lifetime(r, Transition::O1),
        es_lifetime(r, Transition::O2)
    );
    s
}

pub fn run(a: FitArgs) -> Result<(), CliError> {
    if !a.manifest.exists() {
        return Err(CliError::Config(format!("manifest: {} does not exist", a.manifest.display())));
    }
    let manifest = FitManifest::load(&a.manifest)?;
    let dir = a.manifest.parent().map(PathBuf::from).unwrap_or_default();
    let mut problem = manifest.problem(&dir)?;
    if let Some(r) = a.restarts {
        problem.restarts = r;
    }
    let seed = a.seed.unwrap_or(manifest.seed);
    let mut opts = JointOptions::default();
    if let Some(g) = a.generations {
        opts.de.max_generations = g;
    }
    opts.uncertainties = !a.no_uncertainties;
    let result = joint_fit_with(&problem, seed, &opts)?;

    let powers = problem.decay_powers();
    let fitted: Vec<(f64, f64)> = powers.iter().map(|&pw| (pw, result.params.ms2_rate_at(pw))).collect();
    let inferred = if powers.len() >= 2 {
        match infer_powers(&fitted, problem.reference_power_nw, result.params.rates.gamma_3p) {
            Ok(v) => Some(v),
            Err(e) => {
                eprintln!("warning: power inference skipped: {e}");
                None
            }
        }
    } else {
        None
    };

    write_text(
        &a.out.join("rates.json"),
        &(ModelFile::from_params(&result.params).to_json_string() + "\n"),
    )?;
    let diag = Diagnostics {
        fit: &result,
        inferred_powers: inferred.clone(),
    };
    let json = serde_json::to_string_pretty(&diag).map_err(|e| CliError::Simulation(e.to_string()))?;
    write_text(&a.out.join("diagnostics.json"), &(json + "\n"))?;

    let mut series = Vec::new();
    for (d, res) in problem.datasets.iter().zip(&result.datasets) {
        let model = simulate_dataset(&result.params, d, &problem.calibration)?;
        let mut csv = String::from("time_ns,observed,model,residual\n");
        for ((t, o), m) in d.trace.times.iter().zip(&d.trace.signal).zip(&model) {
            let m = m * res.scale;
            let _ = writeln!(csv, "{t:?},{o:?},{m:?},{:?}", o - m);
        }
        write_text(&with_suffix(&a.out.join("residuals.csv"), &res.label), &csv)?;
        if matches!(d.kind, DatasetKind::ResonantDecay { .. }) {
            series.push(Series {
                label: format!("{} data", res.label),
                x: d.trace.times.clone(),
                y: d.trace.signal.clone(),
            });
            series.push(Series {
                label: format!("{} fit", res.label),
                x: d.trace.times.clone(),
                y: model.iter().map(|m| m * res.scale).collect(),
            });
        }
    }
    if let Some(plot) = &a.plot {
        write_text(plot, &line_chart(&series, "Resonant decays", "time (ns)", "counts", false))?;
    }

    print!("{}", rate_table(&result.params, inferred.as_deref(), &powers));
    println!(
        "objective = {:.6e}, lifetime constraint violation = {:.2e}",
        result.objective, result.constraint_violation
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}
