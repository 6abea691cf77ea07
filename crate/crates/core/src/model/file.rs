//! JSON model file. Lifetimes are stored in ns, two decimals as measured;
//! in memory everything is a rate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mhz_to_rad_per_ns, rad_per_ns_to_mhz, ModelError, ModelParams, Ms2Override, RateSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimesNs {
    pub gamma_r: f64,
    pub gamma_1: f64,
    pub gamma_1p: f64,
    pub gamma_2: f64,
    pub gamma_2p: f64,
    pub gamma_3: f64,
    pub gamma_4: f64,
    pub gamma_3p_intrinsic: f64,
    pub gamma_4p_intrinsic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ms2OverrideEntry {
    #[serde(rename = "power_nW")]
    pub power_nw: f64,
    pub lifetime_ns_gamma3p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub lifetimes_ns: LifetimesNs,
    #[serde(rename = "kappa_deshelve_per_ns_per_nW")]
    pub kappa_deshelve_per_ns_per_nw: f64,
    #[serde(rename = "zfs_gs_MHz")]
    pub zfs_gs_mhz: f64,
    #[serde(rename = "zfs_es_MHz")]
    pub zfs_es_mhz: f64,
    #[serde(default)]
    pub ms2_power_overrides: Vec<Ms2OverrideEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_dephasing_per_ns: Option<f64>,
}

impl ModelFile {
    pub fn from_json_str(s: &str) -> Result<Self, ModelError> {
        serde_json::from_str(s).map_err(|e| ModelError::File(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::File(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model file serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string() + "\n")
            .map_err(|e| ModelError::File(format!("{}: {e}", path.display())))
    }

    /// Converts to in-memory parameters and validates them.
    pub fn to_params(&self) -> Result<ModelParams, ModelError> {
        let l = &self.lifetimes_ns;
        let rates = RateSet {
            gamma_r: 1.0 / l.gamma_r,
            gamma_1: 1.0 / l.gamma_1,
            gamma_1p: 1.0 / l.gamma_1p,
            gamma_2: 1.0 / l.gamma_2,
            gamma_2p: 1.0 / l.gamma_2p,
            gamma_3: 1.0 / l.gamma_3,
            gamma_4: 1.0 / l.gamma_4,
            gamma_3p: 1.0 / l.gamma_3p_intrinsic,
            gamma_4p: 1.0 / l.gamma_4p_intrinsic,
            kappa_deshelve: self.kappa_deshelve_per_ns_per_nw,
        };
        let params = ModelParams {
            zfs_gs: mhz_to_rad_per_ns(self.zfs_gs_mhz),
            zfs_es: mhz_to_rad_per_ns(self.zfs_es_mhz),
            rates,
            ms2_overrides: self
                .ms2_power_overrides
                .iter()
                .map(|o| Ms2Override {
                    power_nw: o.power_nw,
                    gamma_3p: 1.0 / o.lifetime_ns_gamma3p,
                })
                .collect(),
            optical_dephasing: self.optical_dephasing_per_ns.unwrap_or(0.0),
        };
        params.validate()?;
        Ok(params)
    }

    pub fn from_params(p: &ModelParams) -> Self {
        let r = &p.rates;
        ModelFile {
            lifetimes_ns: LifetimesNs {
                gamma_r: 1.0 / r.gamma_r,
                gamma_1: 1.0 / r.gamma_1,
                gamma_1p: 1.0 / r.gamma_1p,
                gamma_2: 1.0 / r.gamma_2,
                gamma_2p: 1.0 / r.gamma_2p,
                gamma_3: 1.0 / r.gamma_3,
                gamma_4: 1.0 / r.gamma_4,
                gamma_3p_intrinsic: 1.0 / r.gamma_3p,
                gamma_4p_intrinsic: 1.0 / r.gamma_4p,
            },
            kappa_deshelve_per_ns_per_nw: r.kappa_deshelve,
            zfs_gs_mhz: rad_per_ns_to_mhz(p.zfs_gs),
            zfs_es_mhz: rad_per_ns_to_mhz(p.zfs_es),
            ms2_power_overrides: p
                .ms2_overrides
                .iter()
                .map(|o| Ms2OverrideEntry {
                    power_nw: o.power_nw,
                    lifetime_ns_gamma3p: 1.0 / o.gamma_3p,
                })
                .collect(),
            optical_dephasing_per_ns: (p.optical_dephasing != 0.0).then_some(p.optical_dephasing),
        }
    }

    /// Reference rates as a model file, lifetimes to two decimals.
    pub fn reference() -> Self {
        let p = ModelParams::reference();
        let mut f = Self::from_params(&p);
        f.lifetimes_ns = LifetimesNs {
            gamma_r: 17.84,
            gamma_1: 11.05,
            gamma_1p: 56.75,
            gamma_2: 130.59,
            gamma_2p: 41.02,
            gamma_3: 250.72,
            gamma_4: 1035.35,
            gamma_3p_intrinsic: 5928.73,
            gamma_4p_intrinsic: 5928.73,
        };
        f.zfs_gs_mhz = 70.0;
        f.zfs_es_mhz = 1070.0;
        for (entry, lifetime) in f
            .ms2_power_overrides
            .iter_mut()
            .zip([5928.73, 4377.85, 2170.80, 1481.69])
        {
            entry.lifetime_ns_gamma3p = lifetime;
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_file_matches_params() {
        let f = ModelFile::reference();
        let p = f.to_params().unwrap();
        let q = ModelParams::reference();
        let r = |a: f64, b: f64| ((a - b) / b).abs();
        assert!(r(p.rates.gamma_r, q.rates.gamma_r) < 1e-15);
        assert!(r(p.ms2_rate_at(15.0), q.ms2_rate_at(15.0)) < 1e-15);
        assert!(r(p.zfs_gs, q.zfs_gs) < 1e-14);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&ModelFile::reference().to_json_string()).unwrap();
        v["surprise"] = serde_json::json!(1);
        let err = ModelFile::from_json_str(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("surprise"), "{err}");

        let mut v: serde_json::Value =
            serde_json::from_str(&ModelFile::reference().to_json_string()).unwrap();
        v["lifetimes_ns"]["gamma_5"] = serde_json::json!(1.0);
        assert!(ModelFile::from_json_str(&v.to_string()).is_err());
    }

    #[test]
    fn asymmetric_intrinsic_ms2_is_rejected_on_load() {
        let mut f = ModelFile::reference();
        f.lifetimes_ns.gamma_4p_intrinsic = 9999.0;
        assert!(matches!(
            f.to_params(),
            Err(ModelError::AsymmetricMs2Rates { .. })
        ));
    }

    proptest! {
        #[test]
        fn lifetimes_round_trip(
            lt in proptest::collection::vec(1.0f64..1e5, 8),
            kappa in 0.0f64..1e-3,
        ) {
            let rates = RateSet::from_lifetimes(
                lt[0], lt[1], lt[2], lt[3], lt[4], lt[5], lt[6], lt[7], kappa,
            );
            let p = ModelParams::new(rates);
            let text = ModelFile::from_params(&p).to_json_string();
            let back = ModelFile::from_json_str(&text).unwrap().to_params().unwrap();
            for ((_, a), (_, b)) in p.rates.named().iter().zip(back.rates.named().iter()) {
                prop_assert!(((a - b) / a).abs() <= 1e-12);
            }
            prop_assert_eq!(p.rates.kappa_deshelve, back.rates.kappa_deshelve);
        }
    }
}
