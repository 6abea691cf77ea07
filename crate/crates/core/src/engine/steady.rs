use super::basis::{coords_trace, Coords, DIM};
use super::{DensityMatrix, EngineError, Liouvillian};

/// Relative singular-value threshold for the kernel of the generator.
const KERNEL_RTOL: f64 = 1e-12;

/// Unique stationary state of `l`.
pub fn steady_state(l: &Liouvillian) -> Result<DensityMatrix, EngineError> {
    let m = l.matrix();
    let svd = m.clone().svd(false, true);
    let v_t = svd
        .v_t
        .as_ref()
        .ok_or_else(|| EngineError::IntegrationFailure("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    let tol = KERNEL_RTOL * smax.max(1e-300);
    let kernel: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= tol).collect();
    match kernel.len() {
        1 => {}
        0 => {
            return Err(EngineError::IntegrationFailure(
                "generator has no stationary state".into(),
            ))
        }
        n => return Err(EngineError::DegenerateKernel { dimension: n }),
    }
    let mut x = Coords::from_iterator(v_t.row(kernel[0]).iter().copied());
    let tr = coords_trace(&x);
    if tr.abs() < 1e-12 {
        return Err(EngineError::IntegrationFailure(
            "stationary vector carries no population".into(),
        ));
    }
    x /= tr;
    debug_assert_eq!(x.len(), DIM);
    let rho = DensityMatrix::from_coords(&x).clamp_positive()?;
    let residual = l.apply_coords(&rho.coords()).norm();
    if residual > 1e-10 {
        return Err(EngineError::IntegrationFailure(format!(
            "stationary residual {residual:.3e}"
        )));
    }
    Ok(rho)
}
