use serde::Serialize;

use super::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InferredPower {
    #[serde(rename = "nominal_nW")]
    pub nominal_nw: f64,
    pub gamma_3p: f64,
    #[serde(rename = "inferred_nW")]
    pub inferred_nw: f64,
}

/// Inverts the deshelving law `γ₃′(P) = γ₃′₀ + κP/2`, with κ fixed by the
/// row at `reference_nw`. `fitted` pairs nominal power with the fitted
/// per-outlet MS2 rate.
pub fn infer_powers(fitted: &[(f64, f64)], reference_nw: f64, intrinsic: f64) -> Result<Vec<InferredPower>, FitError> {
    if fitted.len() < 2 {
        return Err(FitError::InvalidProblem("power inference needs at least two power points".into()));
    }
    let mut rows = fitted.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    if rows.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(FitError::NonMonotonicRates);
    }
    let g_ref = rows
        .iter()
        .find(|r| (r.0 - reference_nw).abs() <= 1e-9 * reference_nw.max(1.0))
        .ok_or_else(|| FitError::InvalidProblem(format!("no fitted rate at the {reference_nw} nW reference")))?
        .1;
    if !(g_ref > intrinsic) {
        return Err(FitError::NonMonotonicRates);
    }
    let half_kappa = (g_ref - intrinsic) / reference_nw;
    Ok(rows
        .into_iter()
        .map(|(nominal_nw, gamma_3p)| InferredPower {
            nominal_nw,
            gamma_3p,
            inferred_nw: (gamma_3p - intrinsic) / half_kappa,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_law_inverts_to_nominal() {
        let (g0, k) = (1e-4, 3e-5);
        let rows: Vec<(f64, f64)> = [6.0, 10.0, 15.0, 20.0].iter().map(|&p| (p, g0 + k * p / 2.0)).collect();
        for r in infer_powers(&rows, 20.0, g0).unwrap() {
            assert!((r.inferred_nw - r.nominal_nw).abs() < 1e-12 * r.nominal_nw);
        }
    }

    #[test]
    fn flat_rates_are_rejected() {
        let rows = [(6.0, 1e-3), (20.0, 1e-3)];
        assert!(matches!(infer_powers(&rows, 20.0, 0.0), Err(FitError::NonMonotonicRates)));
    }
}
