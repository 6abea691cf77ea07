use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use vsi_core::lab::{self, ExperimentTrace, PulseSequence, TraceMeta};
use vsi_core::model::Transition;

use super::{inputs, save_trace, with_suffix, write_text};
use crate::error::CliError;
use crate::svg::{line_chart, Series};
use crate::units::{duration_list_ns, duration_ns, NsList};
use crate::ModelArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Short resonant pulse, then dark decay (0.1 ns bins).
    EsLifetime,
    /// Continuous resonant drive after off-resonant preparation.
    ResonantDecay,
    /// Off-resonant pump, dark delay, integrated resonant readout.
    DelayedPulse,
    /// Signed spin contrast versus off-resonant repump duration.
    RepumpContrast,
    /// Ground-normalised p½ versus resonant pumping time.
    SpinPumping,
    /// Readout after a microwave pulse of varying length.
    SpinRabi,
    /// Arbitrary pulse sequence from `--sequence`.
    Sequence,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub experiment: Experiment,
    /// Resonant line: driven line, readout line or initialisation line.
    #[arg(long, default_value = "O2")]
    pub transition: Transition,
    /// Resonant power in nW.
    #[arg(long, default_value_t = 20.0)]
    pub power: f64,
    /// Length of the resonant-decay record (ns, us or ms).
    #[arg(long, default_value = "20us", value_parser = duration_ns)]
    pub duration: f64,
    /// Delays for delayed-pulse, e.g. `0,0.2,1,5us`. Without
    /// `--transition-only`, one CSV per readout line is written.
    #[arg(long, value_parser = duration_list_ns)]
    pub delays: Option<NsList>,
    /// Only read out `--transition` in the delayed-pulse experiment.
    #[arg(long)]
    pub transition_only: bool,
    /// Repump or pumping times for repump-contrast and spin-pumping.
    #[arg(long, value_parser = duration_list_ns)]
    pub times: Option<NsList>,
    /// Microwave pulse lengths for spin-rabi.
    #[arg(long, value_parser = duration_list_ns)]
    pub durations: Option<NsList>,
    /// Resonant spin pumping before the microwave pulse in spin-rabi.
    #[arg(long, default_value = "20us", value_parser = duration_ns)]
    pub pump: f64,
    /// Pulse-sequence JSON for `--experiment sequence`.
    #[arg(long, value_name = "FILE")]
    pub sequence: Option<PathBuf>,
    /// Output trace CSV; a `.meta.json` sidecar is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Also write an SVG plot of the trace.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

fn meta(experiment: &str, a: &SimulateArgs, power: bool) -> TraceMeta {
    let mut m = TraceMeta::new(experiment);
    m.transition = Some(a.transition);
    if power {
        m.power_nw = Some(a.power);
    }
    m
}

fn check_power(p: f64) -> Result<(), CliError> {
    if p.is_finite() && p >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("power: must be finite and non-negative, got {p}")))
    }
}

pub fn run(a: SimulateArgs) -> Result<(), CliError> {
    let (p, cal) = inputs(&a.model)?;
    check_power(a.power)?;
    let line = a.transition;
    let mut outputs: Vec<(PathBuf, ExperimentTrace)> = Vec::new();
    let (xlabel, ylabel, log_x) = match a.experiment {
        Experiment::EsLifetime => {
            let tr = lab::simulate_es_lifetime(line, &p, &cal)?;
            let fit = lab::fit_single_exponential(&tr)?;
            println!("es_lifetime_{line}_ns = {:.4}", fit.tau_ns);
            outputs.push((a.out.clone(), tr));
            ("time after pulse (ns)", "PL (arb.)", false)
        }
        Experiment::ResonantDecay => {
            let tr = lab::simulate_resonant_decay(a.power, line, &p, a.duration, &cal)?;
            match lab::tail_time_constant(&tr, 2000.0f64.min(a.duration / 4.0)) {
                Ok(tau) => println!("tail_time_constant_ns = {tau:.2}"),
                Err(e) => eprintln!("tail fit skipped: {e}"),
            }
            outputs.push((a.out.clone(), tr));
            ("time (ns)", "PL (arb.)", false)
        }
        Experiment::DelayedPulse => {
            let delays = a.delays.clone().unwrap_or_else(vsi_core::fit::default_delays);
            if a.transition_only {
                outputs.push((a.out.clone(), lab::simulate_delayed_pulse_line(&delays, line, &p, &cal)?));
            } else {
                let d = lab::simulate_delayed_pulse(&delays, &p, &cal)?;
                outputs.push((with_suffix(&a.out, "O1"), d.o1));
                outputs.push((with_suffix(&a.out, "O2"), d.o2));
            }
            ("delay (ns)", "integrated counts (arb.)", true)
        }
        Experiment::RepumpContrast => {
            let t_ns = a.times.clone().unwrap_or_else(|| (0..=30).map(|k| k as f64 * 1000.0).collect());
            let t_us: Vec<f64> = t_ns.iter().map(|t| t / 1e3).collect();
            let pts = lab::simulate_repump_contrast(&t_us, line, &p, &cal)?;
            let tr = ExperimentTrace::new(
                pts.iter().map(|c| c.t_repump_us * 1e3).collect(),
                pts.iter().map(|c| c.signed).collect(),
                meta("repump-contrast", &a, false),
            )?;
            outputs.push((a.out.clone(), tr));
            ("repump duration (ns)", "signed contrast (p½ − p¾)", false)
        }
        Experiment::SpinPumping => {
            let t_ns = a.times.clone().unwrap_or_else(|| (0..=40).map(|k| k as f64 * 500.0).collect());
            let t_us: Vec<f64> = t_ns.iter().map(|t| t / 1e3).collect();
            let pts = lab::spin_pumping_curve(&t_us, a.power, line, &p, &cal)?;
            let tr = ExperimentTrace::new(
                t_ns,
                pts.iter().map(|s| s.ground_normalized().0).collect(),
                meta("spin-pumping", &a, true),
            )?;
            if let Some(last) = pts.last() {
                let (h, t) = last.ground_normalized();
                println!("p_half = {h:.4}\np_three_half = {t:.4}");
            }
            outputs.push((a.out.clone(), tr));
            ("pumping time (ns)", "p½ (ground normalised)", false)
        }
        Experiment::SpinRabi => {
            let d = a.durations.clone().unwrap_or_else(|| (0..=80).map(|k| k as f64 * 5.0).collect());
            let tr = lab::simulate_spin_rabi(&d, line, a.pump / 1e3, &p, &cal)?;
            match lab::fit_rabi_fringe(&tr) {
                Ok(f) => println!(
                    "contrast = {:.4}\nsign = {}\nomega_rad_per_ns = {:.6}",
                    f.contrast, f.sign, f.omega
                ),
                Err(e) => eprintln!("fringe fit skipped: {e}"),
            }
            outputs.push((a.out.clone(), tr));
            ("microwave pulse (ns)", "readout counts (arb.)", false)
        }
        Experiment::Sequence => {
            let path = a
                .sequence
                .as_deref()
                .ok_or_else(|| CliError::Config("sequence: `--sequence FILE` is required for this experiment".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let seq: PulseSequence =
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("sequence {}: {e}", path.display())))?;
            outputs.push((a.out.clone(), lab::run_sequence(&seq, &p)?.trace));
            ("time (ns)", "signal (arb.)", false)
        }
    };
    for (path, tr) in &outputs {
        save_trace(tr, path)?;
        println!("wrote {} ({} rows)", path.display(), tr.len());
    }
    if let Some(plot) = &a.plot {
        let series: Vec<Series> = outputs
            .iter()
            .map(|(path, tr)| Series {
                label: label_of(path),
                x: tr.times.clone(),
                y: tr.signal.clone(),
            })
            .collect();
        let title = format!("{:?}", a.experiment);
        write_text(plot, &line_chart(&series, &title, xlabel, ylabel, log_x))?;
    }
    Ok(())
}

fn label_of(p: &Path) -> String {
    p.file_stem().and_then(|s| s.to_str()).unwrap_or("trace").to_string()
}
