use nalgebra::{DMatrix, Matrix6};

use super::basis::{basis_matrix, to_coords, Coords, C64, DIM, N_LEVELS};
use super::hamiltonian::{build_hamiltonian, Hamiltonian};
use super::{DensityMatrix, EngineError};
use crate::model::{DriveConfig, Level, ModelParams, RateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JumpKind {
    /// `|to⟩⟨from|`
    Transfer { from: Level, to: Level },
    /// Projector onto the excited manifold; dephases optical coherences at
    /// half the jump rate.
    ExcitedDephasing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub kind: JumpKind,
    pub rate: f64,
}

impl Jump {
    pub fn transfer(from: Level, to: Level, rate: f64) -> Self {
        Jump {
            kind: JumpKind::Transfer { from, to },
            rate,
        }
    }
}

/// Dissipative channels for a rate set under drive `d`. Zero-rate channels
/// are omitted.
pub fn jump_operators(r: &RateSet<f64>, d: &DriveConfig) -> Vec<Jump> {
    use Level::*;
    let ms2 = r.kappa_deshelve * d.power_nw / 2.0;
    [
        Jump::transfer(EsHalf, GsHalf, r.gamma_r),
        Jump::transfer(EsThreeHalf, GsThreeHalf, r.gamma_r),
        Jump::transfer(EsHalf, Ms1, r.gamma_1),
        Jump::transfer(EsHalf, Ms2, r.gamma_1p),
        Jump::transfer(EsThreeHalf, Ms1, r.gamma_2),
        Jump::transfer(EsThreeHalf, Ms2, r.gamma_2p),
        Jump::transfer(Ms1, GsHalf, r.gamma_3),
        Jump::transfer(Ms1, GsThreeHalf, r.gamma_4),
        Jump::transfer(Ms2, GsHalf, r.gamma_3p + ms2),
        Jump::transfer(Ms2, GsThreeHalf, r.gamma_4p + ms2),
        Jump::transfer(GsHalf, EsHalf, d.w_offres),
        Jump::transfer(GsThreeHalf, EsThreeHalf, d.w_offres),
    ]
    .into_iter()
    .filter(|j| j.rate != 0.0)
    .collect()
}

/// Right-hand side of the master equation for an arbitrary matrix.
fn lindblad_action(h: &Matrix6<C64>, jumps: &[Jump], rho: &Matrix6<C64>) -> Matrix6<C64> {
    // −i[H, ρ], skipping zero entries of ρ (generator columns act on basis
    // matrices with at most two nonzeros).
    let mut out = Matrix6::<C64>::zeros();
    let mi = C64::new(0.0, -1.0);
    for a in 0..N_LEVELS {
        for b in 0..N_LEVELS {
            let v = rho[(a, b)];
            if v == C64::new(0.0, 0.0) {
                continue;
            }
            let v = v * mi;
            for k in 0..N_LEVELS {
                out[(k, b)] += h[(k, a)] * v;
                out[(a, k)] -= v * h[(b, k)];
            }
        }
    }
    for j in jumps {
        let g = j.rate;
        match j.kind {
            JumpKind::Transfer { from, to } => {
                let (a, b) = (to.index(), from.index());
                out[(a, a)] += rho[(b, b)] * g;
                for k in 0..N_LEVELS {
                    out[(b, k)] -= rho[(b, k)] * (g / 2.0);
                    out[(k, b)] -= rho[(k, b)] * (g / 2.0);
                }
            }
            JumpKind::ExcitedDephasing => {
                let es = |k: usize| k == Level::EsHalf.index() || k == Level::EsThreeHalf.index();
                for k in 0..N_LEVELS {
                    for l in 0..N_LEVELS {
                        if es(k) != es(l) {
                            out[(k, l)] -= rho[(k, l)] * (g / 2.0);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Lindblad generator as a real 36×36 matrix over Hermitian coordinates
/// (see [`super::basis`]).
#[derive(Debug, Clone)]
pub struct Liouvillian {
    h: Hamiltonian,
    jumps: Vec<Jump>,
    m: DMatrix<f64>,
}

pub fn build_liouvillian(h: &Hamiltonian, r: &RateSet<f64>, d: &DriveConfig) -> Liouvillian {
    Liouvillian::from_parts(h.clone(), jump_operators(r, d))
}

impl Liouvillian {
    pub fn from_parts(h: Hamiltonian, jumps: Vec<Jump>) -> Self {
        let mut m = DMatrix::zeros(DIM, DIM);
        for c in 0..DIM {
            let col = to_coords(&lindblad_action(h.matrix(), &jumps, &basis_matrix(c)));
            m.set_column(c, &col);
        }
        Liouvillian { h, jumps, m }
    }

    /// Generator for a model under one drive: MS2 outlets resolved at the
    /// drive power (per-power overrides first) and optional optical dephasing.
    pub fn for_drive(p: &ModelParams, d: &DriveConfig) -> Result<Self, EngineError> {
        let h = build_hamiltonian(p, d)?;
        let mut jumps = jump_operators(&p.rates_at(d.power_nw), d);
        if p.optical_dephasing > 0.0 {
            jumps.push(Jump {
                kind: JumpKind::ExcitedDephasing,
                rate: 2.0 * p.optical_dephasing,
            });
        }
        Ok(Self::from_parts(h, jumps))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Matrix6<C64> {
        lindblad_action(self.h.matrix(), &self.jumps, rho.matrix())
    }

    pub fn apply_coords(&self, x: &Coords) -> Coords {
        let y = &self.m * x;
        Coords::from_iterator(y.iter().copied())
    }

    /// Column-stacking superoperator acting on `vec(ρ)` (complex, 36×36).
    pub fn superoperator(&self) -> DMatrix<C64> {
        let mut s = DMatrix::zeros(DIM, DIM);
        for col in 0..DIM {
            let mut e = Matrix6::<C64>::zeros();
            e[(col % N_LEVELS, col / N_LEVELS)] = C64::new(1.0, 0.0);
            let out = lindblad_action(self.h.matrix(), &self.jumps, &e);
            for row in 0..DIM {
                s[(row, col)] = out[(row % N_LEVELS, row / N_LEVELS)];
            }
        }
        s
    }

    /// Coordinates reachable from the nonzero coordinates of `x`. The
    /// complement stays exactly zero under evolution.
    pub fn support(&self, x: &Coords) -> Vec<usize> {
        let mut seen = [false; DIM];
        let mut stack: Vec<usize> = (0..DIM).filter(|&c| x[c] != 0.0).collect();
        for &c in &stack {
            seen[c] = true;
        }
        while let Some(c) = stack.pop() {
            for r in 0..DIM {
                if !seen[r] && self.m[(r, c)] != 0.0 {
                    seen[r] = true;
                    stack.push(r);
                }
            }
        }
        (0..DIM).filter(|&c| seen[c]).collect()
    }

    /// Splits `idx` into groups of coordinates that do not influence each
    /// other in either direction.
    pub fn components(&self, idx: &[usize]) -> Vec<Vec<usize>> {
        let mut label = [usize::MAX; DIM];
        let mut groups = Vec::new();
        for &start in idx {
            if label[start] != usize::MAX {
                continue;
            }
            let g = groups.len();
            let mut members = vec![start];
            label[start] = g;
            let mut k = 0;
            while k < members.len() {
                let c = members[k];
                k += 1;
                for &o in idx {
                    if label[o] == usize::MAX && (self.m[(o, c)] != 0.0 || self.m[(c, o)] != 0.0) {
                        label[o] = g;
                        members.push(o);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        groups
    }

    pub fn restrict(&self, idx: &[usize]) -> DMatrix<f64> {
        self.m.select_rows(idx).select_columns(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Transition;

    fn reference(d: DriveConfig) -> Liouvillian {
        Liouvillian::for_drive(&ModelParams::reference(), &d).unwrap()
    }

    #[test]
    fn trace_is_conserved_column_by_column() {
        let mut d = DriveConfig::resonant(Transition::O1, 0.3, 10.0);
        d.omega_mw = 0.02;
        d.delta_l = 0.1;
        let l = reference(d);
        for c in 0..DIM {
            let s: f64 = (0..N_LEVELS).map(|r| l.matrix()[(r, c)]).sum();
            assert!(s.abs() < 1e-15, "column {c}: {s}");
        }
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let l = reference(DriveConfig::dark());
        let d = l.apply(&DensityMatrix::pure(Level::GsHalf));
        assert!(d.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn complex_superoperator_matches_real_form() {
        let l = reference(DriveConfig::resonant(Transition::O2, 0.2, 6.0));
        let rho = DensityMatrix::from_populations([0.3, 0.2, 0.1, 0.2, 0.1, 0.1]).unwrap();
        let v = nalgebra::DVector::from_iterator(36, rho.matrix().iter().copied());
        let dv = l.superoperator() * v;
        let direct = l.apply(&rho);
        for (a, b) in dv.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
        let dx = l.apply_coords(&rho.coords());
        assert!((dx - to_coords(&direct)).norm() < 1e-15);
    }

    #[test]
    fn support_of_populations_under_one_laser() {
        let l = reference(DriveConfig::resonant(Transition::O1, 0.2, 6.0));
        let x = DensityMatrix::thermal_ground().coords();
        // ES³ is never fed; the resonant coherence GS½–ES½ is purely imaginary
        assert_eq!(l.support(&x), vec![0, 1, 2, 4, 5, 9]);
        let dark = reference(DriveConfig::dark());
        assert_eq!(dark.support(&x), vec![0, 1]);
    }

    #[test]
    fn zero_rates_drop_channels() {
        let mut r = RateSet::reference();
        r.gamma_1p = 0.0;
        r.gamma_2p = 0.0;
        let jumps = jump_operators(&r, &DriveConfig::dark());
        assert_eq!(jumps.len(), 8);
    }
}
