use nalgebra::Matrix6;

use super::basis::C64;
use super::EngineError;
use crate::model::{DriveConfig, Level, ModelError, ModelParams, ResonantTarget};

/// Rotating-frame Hamiltonian in rad/ns.
///
/// The frame is chosen so that GS½ sits at zero, GS³ at `−δ_MW` and each
/// excited level below its ground partner by the laser detuning from that
/// line. The two lines are separated by `D_g − D_e`, so a laser at `δ_L`
/// from the targeted line is detuned by `δ_L ± (D_g − D_e)` from the other.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    m: Matrix6<C64>,
}

impl Hamiltonian {
    pub fn from_matrix(m: Matrix6<C64>) -> Result<Self, EngineError> {
        let err = (m - m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if err > 1e-12 {
            return Err(EngineError::InvalidState(format!(
                "Hamiltonian not Hermitian (error {err:.3e})"
            )));
        }
        Ok(Hamiltonian { m })
    }

    pub fn zero() -> Self {
        Hamiltonian {
            m: Matrix6::zeros(),
        }
    }

    pub fn matrix(&self) -> &Matrix6<C64> {
        &self.m
    }

    pub fn eigenvalues(&self) -> [f64; 6] {
        let mut e: [f64; 6] = self.m.symmetric_eigenvalues().into();
        e.sort_by(f64::total_cmp);
        e
    }
}

/// Laser detunings `(δ₁, δ₂)` from the O1 and O2 lines.
pub(crate) fn line_detunings(p: &ModelParams, d: &DriveConfig) -> (f64, f64) {
    let split = p.zfs_gs - p.zfs_es;
    match d.target {
        ResonantTarget::None => (0.0, 0.0),
        ResonantTarget::O1 | ResonantTarget::Both => (d.delta_l, d.delta_l + split),
        ResonantTarget::O2 => (d.delta_l - split, d.delta_l),
    }
}

pub fn build_hamiltonian(p: &ModelParams, d: &DriveConfig) -> Result<Hamiltonian, EngineError> {
    d.validate().map_err(|e| match e {
        ModelError::ConflictingDrives => EngineError::ConflictingDrives,
        other => EngineError::Model(other),
    })?;
    let (g1, g3) = (Level::GsHalf.index(), Level::GsThreeHalf.index());
    let (e1, e3) = (Level::EsHalf.index(), Level::EsThreeHalf.index());
    let (d1, d2) = line_detunings(p, d);

    let mut m = Matrix6::<C64>::zeros();
    let re = |x: f64| C64::new(x, 0.0);
    m[(g3, g3)] = re(-d.delta_mw);
    m[(e1, e1)] = re(-d1);
    m[(e3, e3)] = re(-d.delta_mw - d2);

    let mut couple = |a: usize, b: usize, w: f64| {
        if w != 0.0 {
            m[(a, b)] = re(w);
            m[(b, a)] = re(w);
        }
    };
    if matches!(d.target, ResonantTarget::O1 | ResonantTarget::Both) {
        couple(g1, e1, d.omega_l);
    }
    if matches!(d.target, ResonantTarget::O2 | ResonantTarget::Both) {
        couple(g3, e3, d.omega_l);
    }
    couple(g1, g3, d.omega_mw);
    Ok(Hamiltonian { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Transition;

    fn off_diagonal_nonzero(h: &Hamiltonian) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                if i != j && h.matrix()[(i, j)].norm() != 0.0 {
                    v.push((i, j));
                }
            }
        }
        v
    }

    #[test]
    fn undriven_is_diagonal() {
        let h = build_hamiltonian(&ModelParams::reference(), &DriveConfig::dark()).unwrap();
        assert!(off_diagonal_nonzero(&h).is_empty());
    }

    #[test]
    fn o2_drive_touches_only_its_pair() {
        let p = ModelParams::reference();
        let h = build_hamiltonian(&p, &DriveConfig::resonant(Transition::O2, 0.2, 6.0)).unwrap();
        assert_eq!(off_diagonal_nonzero(&h), vec![(1, 3), (3, 1)]);
        // resonance on the driven line; the other line is a full splitting away
        assert_eq!(h.matrix()[(3, 3)].re, h.matrix()[(1, 1)].re);
        let split = p.zfs_gs - p.zfs_es;
        assert!((h.matrix()[(2, 2)].re - split).abs() < 1e-12);
    }

    #[test]
    fn conflicting_drive_is_an_error() {
        let mut d = DriveConfig::resonant(Transition::O1, 0.1, 6.0);
        d.w_offres = 1e-3;
        assert_eq!(
            build_hamiltonian(&ModelParams::reference(), &d),
            Err(EngineError::ConflictingDrives)
        );
    }

    #[test]
    fn resonant_block_has_eigenvalues_plus_minus_omega() {
        // analytic 2×2: [[0, Ω], [Ω, 0]] has eigenvalues ±Ω
        let omega = 0.37;
        let p = ModelParams::reference();
        let h = build_hamiltonian(&p, &DriveConfig::resonant(Transition::O2, omega, 0.0)).unwrap();
        let m = h.matrix();
        let block = nalgebra::Matrix2::new(m[(1, 1)], m[(1, 3)], m[(3, 1)], m[(3, 3)]);
        let mut e: [f64; 2] = block.symmetric_eigenvalues().into();
        e.sort_by(f64::total_cmp);
        assert!((e[0] + omega).abs() < 1e-12 && (e[1] - omega).abs() < 1e-12);
    }
}
