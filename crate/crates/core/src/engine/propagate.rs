use nalgebra::{DMatrix, DVector};

use super::basis::{Coords, DIM};
use super::{DensityMatrix, EngineError, Liouvillian};

/// `exp(L t)` restricted to a set of coordinates closed under `L`, with an
/// optional time integral `∫₀ᵗ exp(L s) ds` for integrated detection.
#[derive(Debug, Clone)]
pub struct Propagator {
    idx: Vec<usize>,
    map: DMatrix<f64>,
    integral: Option<DMatrix<f64>>,
    duration: f64,
}

impl Propagator {
    pub fn new(l: &Liouvillian, idx: &[usize], t: f64) -> Result<Self, EngineError> {
        check_duration(t)?;
        let a = l.restrict(idx) * t;
        let map = finite(a.exp())?;
        Ok(Propagator {
            idx: idx.to_vec(),
            map,
            integral: None,
            duration: t,
        })
    }

    /// Propagator and its time integral from one augmented exponential
    /// `exp([[A, I], [0, 0]] t)`.
    pub fn with_integral(l: &Liouvillian, idx: &[usize], t: f64) -> Result<Self, EngineError> {
        check_duration(t)?;
        let n = idx.len();
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n))
            .copy_from(&(l.restrict(idx) * t));
        for i in 0..n {
            big[(i, n + i)] = t;
        }
        let e = finite(big.exp())?;
        Ok(Propagator {
            idx: idx.to_vec(),
            map: e.view((0, 0), (n, n)).into_owned(),
            integral: Some(e.view((0, n), (n, n)).into_owned()),
            duration: t,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.idx
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn apply(&self, x: &Coords) -> Coords {
        scatter(&self.idx, &(&self.map * gather(&self.idx, x)))
    }

    /// Propagator matrix on [`Self::support`] coordinates.
    pub fn reduced_map(&self) -> &DMatrix<f64> {
        &self.map
    }

    pub fn reduced_integral(&self) -> Option<&DMatrix<f64>> {
        self.integral.as_ref()
    }

    pub fn apply_integral(&self, x: &Coords) -> Option<Coords> {
        self.integral
            .as_ref()
            .map(|g| scatter(&self.idx, &(g * gather(&self.idx, x))))
    }
}

pub(crate) fn gather(idx: &[usize], x: &Coords) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i]))
}

pub(crate) fn scatter(idx: &[usize], y: &DVector<f64>) -> Coords {
    let mut x = Coords::zeros();
    for (k, &i) in idx.iter().enumerate() {
        x[i] = y[k];
    }
    x
}

fn check_duration(t: f64) -> Result<(), EngineError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(EngineError::InvalidDuration(t))
    }
}

fn finite(m: DMatrix<f64>) -> Result<DMatrix<f64>, EngineError> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(m)
    } else {
        Err(EngineError::IntegrationFailure(
            "matrix exponential overflowed".into(),
        ))
    }
}

/// Evolves `rho0` for `t` ns under a constant generator.
pub fn evolve(rho0: &DensityMatrix, l: &Liouvillian, t: f64) -> Result<DensityMatrix, EngineError> {
    check_duration(t)?;
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let x0 = rho0.coords();
    let idx = l.support(&x0);
    debug_assert!(idx.len() <= DIM);
    let x = Propagator::new(l, &idx, t)?.apply(&x0);
    DensityMatrix::from_coords(&x).clamp_positive()
}
