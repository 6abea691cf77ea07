use super::{mhz_to_rad_per_ns, Metastable, ModelError, RateSet};

/// Measured MS2 outlet rate (per channel, ns⁻¹) at a specific optical power.
/// When a drive's power matches an override, the override replaces the
/// linear deshelving law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ms2Override {
    pub power_nw: f64,
    pub gamma_3p: f64,
}

/// Everything the engine needs besides the drive.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Ground-state zero-field splitting D_g, rad/ns.
    pub zfs_gs: f64,
    /// Excited-state zero-field splitting D_e, rad/ns.
    pub zfs_es: f64,
    pub rates: RateSet<f64>,
    pub ms2_overrides: Vec<Ms2Override>,
    /// Optional pure dephasing of the optical coherences, ns⁻¹.
    pub optical_dephasing: f64,
}

impl ModelParams {
    pub fn new(rates: RateSet<f64>) -> Self {
        ModelParams {
            zfs_gs: mhz_to_rad_per_ns(70.0),
            zfs_es: mhz_to_rad_per_ns(1070.0),
            rates,
            ms2_overrides: Vec::new(),
            optical_dephasing: 0.0,
        }
    }

    /// Measured V2 rates including the four per-power MS2 rows.
    pub fn reference() -> Self {
        let mut p = Self::new(RateSet::reference());
        p.ms2_overrides = [
            (6.0, 5928.73),
            (10.0, 4377.85),
            (15.0, 2170.80),
            (20.0, 1481.69),
        ]
        .iter()
        .map(|&(power_nw, lifetime)| Ms2Override {
            power_nw,
            gamma_3p: 1.0 / lifetime,
        })
        .collect();
        p
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.rates.validate()?;
        for (name, v) in [("zfs_gs", self.zfs_gs), ("zfs_es", self.zfs_es)] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if !self.optical_dephasing.is_finite() || self.optical_dephasing < 0.0 {
            return Err(ModelError::NonPositiveRate("optical_dephasing"));
        }
        for (i, o) in self.ms2_overrides.iter().enumerate() {
            if !o.power_nw.is_finite() || o.power_nw < 0.0 {
                return Err(ModelError::File(format!(
                    "ms2_power_overrides[{i}].power_nW must be finite and non-negative"
                )));
            }
            if !o.gamma_3p.is_finite() || o.gamma_3p <= 0.0 {
                return Err(ModelError::NonPositiveRate("ms2_power_overrides.gamma_3p"));
            }
            if self.ms2_overrides[..i]
                .iter()
                .any(|p| same_power(p.power_nw, o.power_nw))
            {
                return Err(ModelError::File(format!(
                    "duplicate MS2 override at {} nW",
                    o.power_nw
                )));
            }
        }
        Ok(())
    }

    pub fn override_at(&self, power_nw: f64) -> Option<&Ms2Override> {
        self.ms2_overrides
            .iter()
            .find(|o| same_power(o.power_nw, power_nw))
    }

    /// Per-channel MS2 outlet rate at `power_nw`.
    pub fn ms2_rate_at(&self, power_nw: f64) -> f64 {
        match self.override_at(power_nw) {
            Some(o) => o.gamma_3p,
            None => self.rates.ms2_rate_at(power_nw),
        }
    }

    /// Rate set with the MS2 outlets resolved at `power_nw` and the
    /// deshelving coefficient folded in.
    pub fn rates_at(&self, power_nw: f64) -> RateSet<f64> {
        self.rates.with_ms2_rate(self.ms2_rate_at(power_nw))
    }

    pub fn ms_lifetime(&self, which: Metastable, power_nw: f64) -> f64 {
        match which {
            Metastable::Ms1 => super::ms_lifetime(&self.rates, Metastable::Ms1, 0.0),
            Metastable::Ms2 => 0.5 / self.ms2_rate_at(power_nw),
        }
    }

    pub fn with_rates(&self, rates: RateSet<f64>) -> Self {
        ModelParams {
            rates,
            ..self.clone()
        }
    }
}

fn same_power(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
