//! Closed-form fidelity budget of the time-bin GHZ/cluster protocol.

use serde::{Deserialize, Serialize};

use super::GhzError;
use crate::model::RateSet;
use crate::scalar::{clamp_unit, Real};

/// Purcell search domain.
pub const PURCELL_RANGE: (f64, f64) = (1.0, 1e5);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinalGate {
    /// GHZ state.
    #[default]
    X,
    /// 1D cluster state.
    Hadamard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig<T: Real = f64> {
    /// Number of photons.
    pub n: usize,
    /// O1–O2 splitting, rad/ns.
    pub delta: T,
    /// Debye-Waller factor.
    pub alpha: T,
    /// Pure dephasing rate, ns⁻¹.
    pub gamma_d: T,
    pub rates: RateSet<T>,
    pub purcell: T,
    pub final_gate: FinalGate,
}

impl<T: Real> ProtocolConfig<T> {
    /// 1 GHz splitting, α = 0.09, no dephasing, no cavity.
    pub fn new(n: usize, rates: RateSet<T>) -> Self {
        ProtocolConfig {
            n,
            delta: T::lit(2.0 * std::f64::consts::PI),
            alpha: T::lit(0.09),
            gamma_d: T::zero(),
            rates,
            purcell: T::one(),
            final_gate: FinalGate::X,
        }
    }

    pub fn with_purcell(mut self, p: T) -> Self {
        self.purcell = p;
        self
    }

    pub fn validate(&self) -> Result<(), GhzError> {
        if self.n == 0 {
            return Err(GhzError::InvalidConfig("N must be at least 1".into()));
        }
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(GhzError::InvalidConfig("alpha must lie in (0, 1]".into()));
        }
        if !(self.purcell >= T::zero() && self.purcell.is_finite()) {
            return Err(GhzError::InvalidConfig("purcell must be finite and non-negative".into()));
        }
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return Err(GhzError::InvalidConfig("delta must be positive".into()));
        }
        if !(self.gamma_d >= T::zero() && self.gamma_d.is_finite()) {
            return Err(GhzError::InvalidConfig("gamma_d must be non-negative".into()));
        }
        if !self.rates.is_physical() {
            return Err(GhzError::InvalidConfig("rates must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityBudget<T = f64> {
    pub f_p: T,
    pub f_ex: T,
    pub f_br: T,
    pub f_t: T,
    pub gamma_eff: T,
    pub pi_pulse_ns: T,
}

/// `(1 − α)γ_r + Pαγ_r`
pub fn purcell_rate<T: Real>(gamma_r: T, alpha: T, purcell: T) -> T {
    (T::one() - alpha) * gamma_r + purcell * alpha * gamma_r
}

/// `1 − Nγ_d/(γ_eff + 2γ_d)`, clamped to [0, 1].
pub fn fidelity_phonon<T: Real>(n: usize, gamma_d: T, gamma_eff: T) -> T {
    if gamma_d == T::zero() {
        return T::one();
    }
    clamp_unit(T::one() - T::lit(n as f64) * gamma_d / (gamma_eff + T::lit(2.0) * gamma_d))
}

/// `1 − N(√3π/8)γ_eff/Δ`, clamped to [0, 1].
pub fn fidelity_excitation<T: Real>(n: usize, gamma_eff: T, delta: T) -> T {
    let k = T::lit(3f64.sqrt() * std::f64::consts::PI / 8.0);
    clamp_unit(T::one() - T::lit(n as f64) * k * gamma_eff / delta)
}

/// Probability that an O2 excitation ends in a ZPL photon.
pub fn zpl_emission_prob<T: Real>(r: &RateSet<T>, alpha: T, purcell: T) -> T {
    let zpl = purcell * alpha * r.gamma_r;
    zpl / ((T::one() - alpha) * r.gamma_r + zpl + r.gamma_2 + r.gamma_2p)
}

/// `P_O2^N`
pub fn fidelity_branching<T: Real>(n: usize, p_o2: T) -> T {
    p_o2.powi(n as i32)
}

/// Square π pulse whose Rabi frequency makes the line detuned by Δ complete
/// a full 2π rotation: `√3π/Δ`.
pub fn pi_pulse_duration<T: Real>(delta: T) -> T {
    T::lit(3f64.sqrt() * std::f64::consts::PI) / delta
}

pub fn budget<T: Real>(c: &ProtocolConfig<T>) -> FidelityBudget<T> {
    let gamma_eff = purcell_rate(c.rates.gamma_r, c.alpha, c.purcell);
    let f_p = fidelity_phonon(c.n, c.gamma_d, gamma_eff);
    let f_ex = fidelity_excitation(c.n, gamma_eff, c.delta);
    let f_br = fidelity_branching(c.n, zpl_emission_prob(&c.rates, c.alpha, c.purcell));
    FidelityBudget {
        f_p,
        f_ex,
        f_br,
        f_t: f_p * f_ex * f_br,
        gamma_eff,
        pi_pulse_ns: pi_pulse_duration(c.delta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PurcellOptimum<T = f64> {
    pub purcell: T,
    pub budget: FidelityBudget<T>,
    /// False when the maximum sits on the boundary of the search domain.
    pub interior: bool,
}

const GRID: usize = 2000;

fn total<T: Real>(c: &ProtocolConfig<T>, p: T) -> T {
    budget(&c.with_purcell(p)).f_t
}

/// Maximises F_t over P ∈ [1, 10⁵]: log-spaced scan, then golden section on
/// ln P between the neighbours of the best grid point.
pub fn optimize_purcell<T: Real>(c: &ProtocolConfig<T>) -> Result<PurcellOptimum<T>, GhzError> {
    c.validate()?;
    let (lo, hi) = (T::lit(PURCELL_RANGE.0.ln()), T::lit(PURCELL_RANGE.1.ln()));
    let at = |u: T| total(c, u.exp());
    let step = (hi - lo) / T::lit(GRID as f64);
    let grid: Vec<T> = (0..=GRID).map(|k| lo + step * T::lit(k as f64)).collect();
    let vals: Vec<T> = grid.iter().map(|&u| at(u)).collect();
    let k = (0..=GRID)
        .max_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(GRID)]);
    let g = T::lit(0.618_033_988_749_894_8);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (at(x1), at(x2));
    let tol = T::lit(1e-7);
    while b - a > tol {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = at(x2);
        }
    }
    let mut best = if f1 > f2 { x1 } else { x2 };
    // The golden search only improves on the grid; keep the grid point if
    // the bracket was one-sided at a boundary.
    if at(best) < vals[k] {
        best = grid[k];
    }
    let purcell = best.exp().max(T::lit(PURCELL_RANGE.0)).min(T::lit(PURCELL_RANGE.1));
    let interior = k != 0 && k != GRID;
    Ok(PurcellOptimum {
        purcell,
        budget: budget(&c.with_purcell(purcell)),
        interior,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MinPurcell<T = f64> {
    Feasible { purcell: T, budget: FidelityBudget<T> },
    /// The best achievable F_t is below the target.
    Infeasible { best_f_t: T, best_purcell: T },
}

impl<T: Real> MinPurcell<T> {
    pub fn purcell(&self) -> Option<T> {
        match self {
            MinPurcell::Feasible { purcell, .. } => Some(*purcell),
            MinPurcell::Infeasible { .. } => None,
        }
    }
}

/// Smallest P with F_t(P) ≥ `target`, by bisection on the rising flank
/// below the optimum.
pub fn min_purcell<T: Real>(c: &ProtocolConfig<T>, target: T) -> Result<MinPurcell<T>, GhzError> {
    if !(target > T::zero() && target < T::one()) {
        return Err(GhzError::InvalidConfig("target fidelity must lie in (0, 1)".into()));
    }
    let opt = optimize_purcell(c)?;
    if opt.budget.f_t < target {
        return Ok(MinPurcell::Infeasible {
            best_f_t: opt.budget.f_t,
            best_purcell: opt.purcell,
        });
    }
    let floor = T::lit(PURCELL_RANGE.0);
    if total(c, floor) >= target {
        return Ok(MinPurcell::Feasible {
            purcell: floor,
            budget: budget(&c.with_purcell(floor)),
        });
    }
    let (mut a, mut b) = (floor.ln(), opt.purcell.ln());
    for _ in 0..200 {
        let m = (a + b) / T::lit(2.0);
        if total(c, m.exp()) >= target {
            b = m;
        } else {
            a = m;
        }
        if b - a <= T::lit(1e-12) * b.abs().max(T::one()) {
            break;
        }
    }
    let purcell = b.exp();
    Ok(MinPurcell::Feasible {
        purcell,
        budget: budget(&c.with_purcell(purcell)),
    })
}
