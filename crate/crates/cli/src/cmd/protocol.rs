use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use vsi_core::ghz::{
    budget, min_purcell, optimize_purcell, zpl_emission_prob, FidelityBudget, MinPurcell, ProtocolConfig,
};

use super::{load_model, write_text};
use crate::error::CliError;
use crate::svg::bar_chart;
use crate::units::{photon_range, PhotonList};

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["optimize", "min_purcell"])))]
pub struct ProtocolArgs {
    /// Model JSON supplying the rates; the built-in reference rates when omitted.
    #[arg(long, value_name = "FILE")]
    pub rates: Option<PathBuf>,
    /// Maximise F_t over the Purcell factor for each N.
    #[arg(long)]
    pub optimize: bool,
    /// Smallest Purcell factor reaching `--target` for each N.
    #[arg(long)]
    pub min_purcell: bool,
    /// Target total fidelity for `--min-purcell`, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub target: f64,
    /// Photon numbers: `3`, `1..10` or `1,2,4`.
    #[arg(long, default_value = "1..10", value_parser = photon_range)]
    pub n: PhotonList,
    /// Debye-Waller factor.
    #[arg(long, default_value_t = 0.09)]
    pub alpha: f64,
    /// O1–O2 splitting in GHz (Δ = 2π × value rad/ns).
    #[arg(long, default_value_t = 1.0)]
    pub splitting_ghz: f64,
    /// Pure dephasing rate in ns⁻¹.
    #[arg(long, default_value_t = 0.0)]
    pub gamma_d: f64,
    /// Budget CSV (`N,purcell,F_p,F_ex,F_br,F_t`); stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Bar chart of the Purcell factors with F_t annotations.
    #[arg(long, value_name = "FILE")]
    pub plot: Option<PathBuf>,
}

fn row(csv: &mut String, n: usize, purcell: f64, b: &FidelityBudget) {
    let _ = writeln!(csv, "{n},{purcell:?},{:?},{:?},{:?},{:?}", b.f_p, b.f_ex, b.f_br, b.f_t);
}

pub fn run(a: ProtocolArgs) -> Result<(), CliError> {
    if a.min_purcell && !(a.target > 0.0 && a.target < 1.0) {
        return Err(CliError::Config(format!("target: must lie in (0, 1), got {}", a.target)));
    }
    if !(a.splitting_ghz.is_finite() && a.splitting_ghz > 0.0) {
        return Err(CliError::Config("splitting-ghz: must be positive".into()));
    }
    let p = load_model(a.rates.as_deref())?;
    let mut base = ProtocolConfig::new(1, p.rates);
    base.alpha = a.alpha;
    base.delta = 2.0 * std::f64::consts::PI * a.splitting_ghz;
    base.gamma_d = a.gamma_d;
    base.validate()?;

    let p_o2 = zpl_emission_prob(&base.rates, base.alpha, 1.0);
    eprintln!(
        "P_O2(P=1) = {p_o2:.4}; F_br(P=1) = {p_o2:.4} for N=1 and {:.3e} for N=3; pi pulse = {:.4} ns",
        p_o2.powi(3),
        budget(&base).pi_pulse_ns
    );

    let mut csv = String::from("N,purcell,F_p,F_ex,F_br,F_t\n");
    let (mut labels, mut bars, mut notes) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &a.n {
        let c = ProtocolConfig { n, ..base };
        labels.push(n.to_string());
        if a.optimize {
            let o = optimize_purcell(&c)?;
            if !o.interior {
                eprintln!("N={n}: F_t is monotone on the Purcell domain; boundary value reported");
            }
            row(&mut csv, n, o.purcell, &o.budget);
            bars.push(o.purcell);
            notes.push(format!("F_t={:.3}", o.budget.f_t));
        } else {
            match min_purcell(&c, a.target)? {
                MinPurcell::Feasible { purcell, budget } => {
                    row(&mut csv, n, purcell, &budget);
                    bars.push(purcell);
                    notes.push(format!("{purcell:.0}"));
                }
                MinPurcell::Infeasible { best_f_t, best_purcell } => {
                    eprintln!("N={n}: infeasible, best F_t = {best_f_t:.4} at P = {best_purcell:.1}");
                    row(&mut csv, n, f64::INFINITY, &budget(&c.with_purcell(best_purcell)));
                    bars.push(f64::NAN);
                    notes.push("infeasible".into());
                }
            }
        }
    }
    match &a.out {
        Some(path) => write_text(path, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(plot) = &a.plot {
        let title = if a.optimize {
            "Optimised Purcell factor per state size".to_string()
        } else {
            format!("Minimum Purcell factor for F_t = {}", a.target)
        };
        write_text(plot, &bar_chart(&labels, &bars, &notes, &title, "photons N", "Purcell factor"))?;
    }
    Ok(())
}
