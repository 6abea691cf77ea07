//! The joint rate fit: parameter layout, objective and the restarted
//! differential-evolution driver.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::optim::{differential_evolution, nelder_mead, DeOptions, NelderMeadOptions, Termination};
use super::problem::{Dataset, DatasetKind, FitProblem, MsVariant};
use super::FitError;
use crate::engine::DensityMatrix;
use crate::lab::{delayed_pulse_from, delayed_pumped_state, prepared_state, resonant_decay_from, Calibration, LabError};
use crate::model::{ModelParams, Ms2Override, RateSet};

/// Relative floor of the per-sample weights `1/max(o, floor·max o)`.
pub const WEIGHT_FLOOR: f64 = 1e-4;

/// One coordinate of the search space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    /// Searched as `ln(value)` when set.
    pub log: bool,
    pub lo: f64,
    pub hi: f64,
}

/// Maps search coordinates to model parameters. The lifetime constraint is
/// built in: γ_r is free, and the remainder of each excited-state decay rate
/// is split between MS1 and MS2 by a fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub specs: Vec<ParamSpec>,
    pub powers: Vec<f64>,
    variant: MsVariant,
    base: ModelParams,
    total: (f64, f64),
    reference: f64,
}

impl Layout {
    pub fn new(problem: &FitProblem) -> Self {
        let b = &problem.bounds;
        let c = &problem.constraint;
        let total = (1.0 / c.tau_o1_ns, 1.0 / c.tau_o2_ns);
        let spec = |name: &str, (lo, hi): (f64, f64), log: bool| ParamSpec {
            name: name.into(),
            log,
            lo,
            hi,
        };
        let ceiling = 0.999 * total.0.min(total.1);
        let mut specs = vec![spec("gamma_r", (b.gamma_r.0.min(ceiling), b.gamma_r.1.min(ceiling)), true)];
        let powers = problem.decay_powers();
        if problem.variant == MsVariant::TwoMs {
            specs.push(spec("ms1_share_o1", b.ms1_share_o1, false));
            specs.push(spec("ms1_share_o2", b.ms1_share_o2, false));
        }
        specs.push(spec("gamma_3", b.gamma_3, true));
        specs.push(spec("gamma_4", b.gamma_4, true));
        if problem.variant == MsVariant::TwoMs {
            specs.push(spec("gamma_3p_intrinsic", b.gamma_3p_intrinsic, true));
            for p in &powers {
                specs.push(spec(&format!("gamma_3p@{p}nW"), b.gamma_3p_power, true));
            }
        }
        Layout {
            specs,
            powers,
            variant: problem.variant,
            base: problem.base.clone(),
            total,
            reference: problem.reference_power_nw,
        }
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    /// Search-space box.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.specs
            .iter()
            .map(|s| if s.log { (s.lo.ln(), s.hi.ln()) } else { (s.lo, s.hi) })
            .collect()
    }

    /// Parameter values in natural units.
    pub fn values(&self, x: &[f64]) -> Vec<f64> {
        self.specs.iter().zip(x).map(|(s, &v)| if s.log { v.exp() } else { v }).collect()
    }

    pub fn decode(&self, x: &[f64]) -> ModelParams {
        let v = self.values(x);
        let gamma_r = v[0];
        let rem = (self.total.0 - gamma_r, self.total.1 - gamma_r);
        let mut p = self.base.clone();
        p.ms2_overrides.clear();
        p.rates = match self.variant {
            MsVariant::TwoMs => {
                let (u1, u2) = (v[1], v[2]);
                let g0 = v[5];
                let per_power = &v[6..];
                p.ms2_overrides = self
                    .powers
                    .iter()
                    .zip(per_power)
                    .map(|(&power_nw, &gamma_3p)| Ms2Override { power_nw, gamma_3p })
                    .collect();
                let kappa = self
                    .powers
                    .iter()
                    .position(|&q| (q - self.reference).abs() <= 1e-9 * q.max(1.0))
                    .map_or(0.0, |k| (2.0 * (per_power[k] - g0) / self.reference).max(0.0));
                RateSet {
                    gamma_r,
                    gamma_1: u1 * rem.0,
                    gamma_1p: (1.0 - u1) * rem.0,
                    gamma_2: u2 * rem.1,
                    gamma_2p: (1.0 - u2) * rem.1,
                    gamma_3: v[3],
                    gamma_4: v[4],
                    gamma_3p: g0,
                    gamma_4p: g0,
                    kappa_deshelve: kappa,
                }
            }
            MsVariant::OneMs => RateSet {
                gamma_r,
                gamma_1: rem.0,
                gamma_1p: 0.0,
                gamma_2: rem.1,
                gamma_2p: 0.0,
                gamma_3: v[1],
                gamma_4: v[2],
                gamma_3p: 1.0,
                gamma_4p: 1.0,
                kappa_deshelve: 0.0,
            },
        };
        p
    }

    /// Search coordinates closest to `p` (clipped to the box). Only exact
    /// for rate sets that satisfy the lifetime constraint.
    pub fn encode(&self, p: &ModelParams) -> Vec<f64> {
        let r = &p.rates;
        let mut v = vec![r.gamma_r];
        let share = |a: f64, b: f64| if a + b > 0.0 { a / (a + b) } else { 1.0 };
        if self.variant == MsVariant::TwoMs {
            v.push(share(r.gamma_1, r.gamma_1p));
            v.push(share(r.gamma_2, r.gamma_2p));
        }
        v.push(r.gamma_3);
        v.push(r.gamma_4);
        if self.variant == MsVariant::TwoMs {
            v.push(r.gamma_3p);
            for &q in &self.powers {
                v.push(p.ms2_rate_at(q));
            }
        }
        self.specs
            .iter()
            .zip(v)
            .map(|(s, x)| {
                let x = x.max(s.lo).min(s.hi);
                if s.log {
                    x.ln()
                } else {
                    x
                }
            })
            .collect()
    }
}

fn model_calibration(cal: &Calibration) -> Calibration {
    Calibration {
        collection_scale: 1.0,
        noise_floor: 0.0,
        ..cal.clone()
    }
}

/// Preparation states shared by all datasets of one evaluation.
#[derive(Default)]
struct Prepared {
    decay: Option<DensityMatrix>,
    delayed: Option<DensityMatrix>,
}

/// Noiseless model signal on the dataset's sampling grid.
pub fn simulate_dataset(p: &ModelParams, d: &Dataset, cal: &Calibration) -> Result<Vec<f64>, LabError> {
    simulate_cached(p, d, &model_calibration(cal), &mut Prepared::default())
}

fn simulate_cached(p: &ModelParams, d: &Dataset, cal: &Calibration, prep: &mut Prepared) -> Result<Vec<f64>, LabError> {
    let t = &d.trace.times;
    match d.kind {
        DatasetKind::ResonantDecay { power_nw, transition } => {
            let rho = match &prep.decay {
                Some(r) => r,
                None => prep.decay.insert(prepared_state(p, cal)?),
            };
            let bin = if t.len() > 1 { t[1] - t[0] } else { 2.0 * t[0] };
            let cal = Calibration {
                decay_bin_ns: bin,
                ..cal.clone()
            };
            Ok(resonant_decay_from(rho, power_nw, transition, p, bin * t.len() as f64, &cal)?.signal)
        }
        DatasetKind::DelayedPulse { transition } => {
            let rho = match &prep.delayed {
                Some(r) => r,
                None => prep.delayed.insert(delayed_pumped_state(p, cal)?),
            };
            Ok(delayed_pulse_from(rho, t, transition, p, cal)?.signal)
        }
    }
}

/// Weighted, normalised misfit of one dataset with its amplitude scale
/// solved in closed form. Returns `(loss, scale)`.
pub fn dataset_loss(observed: &[f64], model: &[f64]) -> (f64, f64) {
    let peak = observed.iter().fold(0.0f64, |m, v| m.max(*v));
    let floor = (WEIGHT_FLOOR * peak).max(f64::MIN_POSITIVE);
    let (mut swom, mut swmm, mut swoo) = (0.0, 0.0, 0.0);
    for (&o, &m) in observed.iter().zip(model) {
        let w = 1.0 / o.max(floor);
        swom += w * o * m;
        swmm += w * m * m;
        swoo += w * o * o;
    }
    if swoo == 0.0 {
        return (0.0, 0.0);
    }
    let scale = if swmm > 0.0 { (swom / swmm).max(0.0) } else { 0.0 };
    let sse: f64 = observed
        .iter()
        .zip(model)
        .map(|(&o, &m)| (o - scale * m).powi(2) / o.max(floor))
        .sum();
    (sse / swoo, scale)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetResidual {
    pub label: String,
    pub scale: f64,
    pub loss: f64,
    /// Unweighted RMS residual relative to the peak observation.
    pub rms_relative: f64,
}

/// Per-dataset misfit of `p`.
pub fn dataset_residuals(p: &ModelParams, problem: &FitProblem) -> Result<Vec<DatasetResidual>, LabError> {
    let cal = model_calibration(&problem.calibration);
    let mut prep = Prepared::default();
    problem
        .datasets
        .iter()
        .map(|d| {
            let m = simulate_cached(p, d, &cal, &mut prep)?;
            let (loss, scale) = dataset_loss(&d.trace.signal, &m);
            let o = &d.trace.signal;
            let sse: f64 = o.iter().zip(&m).map(|(a, b)| (a - scale * b).powi(2)).sum();
            let peak = d.trace.peak();
            Ok(DatasetResidual {
                label: d.kind.label(),
                scale,
                loss,
                rms_relative: if peak > 0.0 { (sse / o.len() as f64).sqrt() / peak } else { 0.0 },
            })
        })
        .collect()
}

/// Multiplier on the squared constraint excess (in units of the tolerance).
pub const CONSTRAINT_PENALTY: f64 = 1e3;

/// Total loss of a full parameter set: summed dataset losses plus a penalty
/// when the excited-state lifetimes miss the constraint by more than its
/// tolerance. Simulation failures count as `+∞`.
pub fn objective(p: &ModelParams, problem: &FitProblem) -> f64 {
    let data = loss_only(p, problem);
    let c = &problem.constraint;
    let excess = (c.violation(&p.rates) - c.tolerance).max(0.0) / c.tolerance;
    data + CONSTRAINT_PENALTY * problem.datasets.len() as f64 * excess * excess
}

fn loss_only(p: &ModelParams, problem: &FitProblem) -> f64 {
    let cal = model_calibration(&problem.calibration);
    let mut prep = Prepared::default();
    let mut total = 0.0;
    for d in &problem.datasets {
        match simulate_cached(p, d, &cal, &mut prep) {
            Ok(m) => total += dataset_loss(&d.trace.signal, &m).0,
            Err(_) => return f64::INFINITY,
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedParameter {
    pub name: String,
    pub value: f64,
    /// One-sigma uncertainty of `ln(value)` for log parameters, of the value
    /// itself otherwise. Infinite when the data do not constrain it.
    pub sigma: f64,
    pub log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartDiagnostics {
    pub seed: u64,
    pub loss: f64,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub diversity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    #[serde(skip)]
    pub params: ModelParams,
    pub parameters: Vec<FittedParameter>,
    pub datasets: Vec<DatasetResidual>,
    pub objective: f64,
    pub constraint_violation: f64,
    pub restarts: Vec<RestartDiagnostics>,
    pub seed: u64,
    /// Parameters whose uncertainty exceeds a factor e (log) or 0.5
    /// (fractions).
    pub underdetermined: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOptions {
    pub de: DeOptions<f64>,
    pub uncertainties: bool,
}

impl Default for JointOptions {
    fn default() -> Self {
        JointOptions {
            de: DeOptions {
                max_generations: 100,
                ..DeOptions::default()
            },
            uncertainties: true,
        }
    }
}

fn restart_seed(seed: u64, r: usize) -> u64 {
    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Restarted differential evolution with a Nelder-Mead polish of the best
/// restart, followed by a curvature estimate of the uncertainties.
pub fn joint_fit(problem: &FitProblem, seed: u64) -> Result<FitResult, FitError> {
    joint_fit_with(problem, seed, &JointOptions::default())
}

pub fn joint_fit_with(problem: &FitProblem, seed: u64, opts: &JointOptions) -> Result<FitResult, FitError> {
    problem.validate()?;
    let layout = Layout::new(problem);
    let bounds = layout.bounds();
    let f = |x: &[f64]| loss_only(&layout.decode(x), problem);
    let mut restarts = Vec::with_capacity(problem.restarts);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let de = DeOptions {
        polish: false,
        ..opts.de.clone()
    };
    for r in 0..problem.restarts {
        let s = restart_seed(seed, r);
        let out = differential_evolution(f, &bounds, s, &de);
        restarts.push(RestartDiagnostics {
            seed: s,
            loss: out.f,
            generations: out.iterations,
            evaluations: out.evaluations,
            converged: out.termination == Termination::Converged,
            diversity: out.diversity.unwrap_or(0.0),
        });
        if best.as_ref().is_none_or(|b| out.f < b.1) {
            best = Some((out.x, out.f));
        }
    }
    let (mut x, mut fx) = best.expect("at least one restart");
    if opts.de.polish {
        let nm = nelder_mead(
            f,
            &x,
            &NelderMeadOptions {
                bounds: Some(bounds.clone()),
                max_iter: 300 * layout.dim(),
                ..NelderMeadOptions::default()
            },
        );
        if nm.f < fx {
            x = nm.x;
            fx = nm.f;
        }
    }
    if !fx.is_finite() {
        return Err(FitError::Infeasible("every evaluated parameter set failed to simulate".into()));
    }
    let params = layout.decode(&x);
    let n_samples: usize = problem.datasets.iter().map(|d| d.trace.len()).sum();
    let sigma = if opts.uncertainties {
        uncertainties(&f, &x, fx, &bounds, n_samples)
    } else {
        vec![f64::NAN; x.len()]
    };
    let values = layout.values(&x);
    let parameters: Vec<FittedParameter> = layout
        .specs
        .iter()
        .zip(values)
        .zip(sigma)
        .map(|((s, value), sigma)| FittedParameter {
            name: s.name.clone(),
            value,
            sigma,
            log: s.log,
        })
        .collect();
    let underdetermined = parameters
        .iter()
        .filter(|p| !(p.sigma <= if p.log { 1.0 } else { 0.5 }))
        .filter(|p| !p.sigma.is_nan())
        .map(|p| p.name.clone())
        .collect::<Vec<_>>();
    let mut warnings = Vec::new();
    if problem.datasets.len() < 2 {
        warnings.push("a single dataset cannot separate the metastable rates; the fit is under-determined".into());
    }
    if problem.decay_powers().len() < 2 {
        warnings.push(
            "decays at a single power cannot separate the intrinsic MS2 rate from deshelving; \
             MS2 rates away from that power are extrapolated"
                .into(),
        );
    }
    if !underdetermined.is_empty() {
        warnings.push(format!("poorly constrained parameters: {}", underdetermined.join(", ")));
    }
    Ok(FitResult {
        datasets: dataset_residuals(&params, problem)?,
        constraint_violation: problem.constraint.violation(&params.rates),
        params,
        parameters,
        objective: fx,
        restarts,
        seed,
        underdetermined,
        warnings,
    })
}

/// Standard errors from a central-difference Hessian of the loss, scaled by
/// the residual variance `2·loss/(n − k)`. Directions with vanishing
/// curvature give infinite sigma.
fn uncertainties(f: &dyn Fn(&[f64]) -> f64, x: &[f64], fx: f64, bounds: &[(f64, f64)], n: usize) -> Vec<f64> {
    let k = x.len();
    let h: Vec<f64> = bounds.iter().map(|(lo, hi)| 1e-3 * (hi - lo).max(1e-12)).collect();
    // Keep every stencil point inside the box.
    let c: Vec<f64> = x
        .iter()
        .zip(bounds)
        .zip(&h)
        .map(|((&v, &(lo, hi)), &s)| v.max(lo + s).min(hi - s))
        .collect();
    let at = |d: &[(usize, f64)]| {
        let mut y = c.clone();
        for &(i, s) in d {
            y[i] += s;
        }
        f(&y)
    };
    let f0 = if c == x { fx } else { f(&c) };
    let mut hess = DMatrix::zeros(k, k);
    for i in 0..k {
        hess[(i, i)] = (at(&[(i, h[i])]) - 2.0 * f0 + at(&[(i, -h[i])])) / (h[i] * h[i]);
        for j in 0..i {
            let v = (at(&[(i, h[i]), (j, h[j])]) - at(&[(i, h[i]), (j, -h[j])]) - at(&[(i, -h[i]), (j, h[j])])
                + at(&[(i, -h[i]), (j, -h[j])]))
                / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return vec![f64::INFINITY; k];
    }
    let s2 = 2.0 * f0.max(f64::MIN_POSITIVE) / (n.saturating_sub(k)).max(1) as f64;
    let eig = SymmetricEigen::new(hess);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..k)
        .map(|i| {
            let mut var = 0.0;
            for m in 0..k {
                let w = eig.eigenvectors[(i, m)].powi(2);
                let lam = eig.eigenvalues[m];
                if lam <= 1e-10 * top {
                    if w > 1e-6 {
                        return f64::INFINITY;
                    }
                } else {
                    var += w / lam;
                }
            }
            (2.0 * s2 * var).sqrt()
        })
        .collect()
}
