//! Closed-form quantities that follow directly from a [`RateSet`].

use crate::scalar::Real;

use super::{Metastable, RateSet, Transition};

/// Excited-state lifetime of the given optical branch, in ns.
pub fn es_lifetime<T: Real>(r: &RateSet<T>, branch: Transition) -> T {
    let total = match branch {
        Transition::O1 => r.gamma_r + r.gamma_1 + r.gamma_1p,
        Transition::O2 => r.gamma_r + r.gamma_2 + r.gamma_2p,
    };
    T::one() / total
}

/// Metastable lifetime in ns. MS2 includes the linear deshelving term at
/// optical power `power_nw`; MS1 ignores the power.
pub fn ms_lifetime<T: Real>(r: &RateSet<T>, which: Metastable, power_nw: T) -> T {
    match which {
        Metastable::Ms1 => T::one() / (r.gamma_3 + r.gamma_4),
        Metastable::Ms2 => T::one() / (r.gamma_3p + r.gamma_4p + r.kappa_deshelve * power_nw),
    }
}

/// Radiative quantum efficiency η = γ_r · τ_ES.
pub fn quantum_efficiency<T: Real>(r: &RateSet<T>, branch: Transition) -> T {
    r.gamma_r * es_lifetime(r, branch)
}

/// Emitter-cavity cooperativity C = P · η · DWF.
pub fn cooperativity<T: Real>(purcell: T, eta: T, dwf: T) -> T {
    purcell * eta * dwf
}

/// MS1 return branching `(to GS½, to GS³)`.
pub fn branching_preference<T: Real>(r: &RateSet<T>) -> (T, T) {
    let total = r.gamma_3 + r.gamma_4;
    (r.gamma_3 / total, r.gamma_4 / total)
}
