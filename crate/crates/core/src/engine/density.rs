use nalgebra::Matrix6;

use super::basis::{from_coords, to_coords, Coords, C64, N_LEVELS};
use super::EngineError;
use crate::model::Level;

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const NEGATIVITY_TOL: f64 = 1e-9;

/// State of the six-level system in [`Level`] ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: Matrix6<C64>,
}

impl DensityMatrix {
    /// Checked constructor.
    pub fn new(m: Matrix6<C64>) -> Result<Self, EngineError> {
        let rho = DensityMatrix { m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn pure(level: Level) -> Self {
        let mut m = Matrix6::zeros();
        m[(level.index(), level.index())] = C64::new(1.0, 0.0);
        DensityMatrix { m }
    }

    /// Incoherent mixture with the given populations.
    pub fn from_populations(p: [f64; N_LEVELS]) -> Result<Self, EngineError> {
        let mut m = Matrix6::zeros();
        for (i, &v) in p.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self::new(m)
    }

    /// Equal mixture of the two ground-state spin levels.
    pub fn thermal_ground() -> Self {
        let mut m = Matrix6::zeros();
        m[(Level::GsHalf.index(), Level::GsHalf.index())] = C64::new(0.5, 0.0);
        m[(Level::GsThreeHalf.index(), Level::GsThreeHalf.index())] = C64::new(0.5, 0.0);
        DensityMatrix { m }
    }

    /// `|ψ⟩⟨ψ|` for a normalised amplitude vector.
    pub fn from_amplitudes(psi: [C64; N_LEVELS]) -> Result<Self, EngineError> {
        let v = nalgebra::Vector6::from(psi);
        let norm = v.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(EngineError::InvalidState(
                "zero or non-finite amplitude vector".into(),
            ));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(DensityMatrix { m: v * v.adjoint() })
    }

    /// Unchecked construction from coordinates.
    pub fn from_coords(x: &Coords) -> Self {
        DensityMatrix { m: from_coords(x) }
    }

    pub fn coords(&self) -> Coords {
        to_coords(&self.m)
    }

    pub fn matrix(&self) -> &Matrix6<C64> {
        &self.m
    }

    pub fn population(&self, level: Level) -> f64 {
        self.m[(level.index(), level.index())].re
    }

    pub fn populations(&self) -> [f64; N_LEVELS] {
        std::array::from_fn(|i| self.m[(i, i)].re)
    }

    pub fn trace(&self) -> f64 {
        (0..N_LEVELS).map(|i| self.m[(i, i)].re).sum()
    }

    /// Largest entry of `|ρ − ρ†|`.
    pub fn hermiticity_error(&self) -> f64 {
        (self.m - self.m.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; N_LEVELS] {
        let mut e: [f64; N_LEVELS] = self.hermitian_part().symmetric_eigenvalues().into();
        e.sort_by(f64::total_cmp);
        e
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self
            .m
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(EngineError::InvalidState("non-finite entry".into()));
        }
        let h = self.hermiticity_error();
        if h > HERMITICITY_TOL {
            return Err(EngineError::InvalidState(format!(
                "not Hermitian (error {h:.3e})"
            )));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(EngineError::InvalidState(format!("trace {tr} is not 1")));
        }
        let lo = self.min_eigenvalue();
        if lo < -NEGATIVITY_TOL {
            return Err(EngineError::InvalidState(format!(
                "negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(())
    }

    /// Removes small negative eigenvalues left by round-off and restores unit
    /// trace. Fails when the violation exceeds [`NEGATIVITY_TOL`].
    pub(crate) fn clamp_positive(self) -> Result<Self, EngineError> {
        let h = self.hermitian_part();
        if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EngineError::IntegrationFailure("non-finite state".into()));
        }
        let eig = h.symmetric_eigen();
        let lo = eig.eigenvalues.min();
        if lo < -NEGATIVITY_TOL {
            return Err(EngineError::IntegrationFailure(format!(
                "positivity lost (eigenvalue {lo:.3e})"
            )));
        }
        if lo >= 0.0 {
            return Ok(DensityMatrix { m: h });
        }
        let d = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
        let v = &eig.eigenvectors;
        let m = v * Matrix6::from_diagonal(&d) * v.adjoint();
        let tr: f64 = (0..N_LEVELS).map(|i| m[(i, i)].re).sum();
        if !(tr > 0.0) {
            return Err(EngineError::IntegrationFailure("trace collapsed".into()));
        }
        Ok(DensityMatrix {
            m: m / C64::new(tr, 0.0),
        })
    }

    fn hermitian_part(&self) -> Matrix6<C64> {
        (self.m + self.m.adjoint()) * C64::new(0.5, 0.0)
    }
}
