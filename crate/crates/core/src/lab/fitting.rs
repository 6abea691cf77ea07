//! Least-squares fits of decays and fringes.
//!
//! Both fits are separable: for a fixed nonlinear parameter the remaining
//! coefficients are linear, so the profile SSE is scanned on a grid,
//! bracketed by golden section and then polished by damped Gauss-Newton on
//! the full parameter vector.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{ExperimentTrace, LabError};

const MIN_SAMPLES: usize = 8;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// `A·exp(−t/τ) + B`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub amplitude: f64,
    pub tau_ns: f64,
    pub offset: f64,
    /// RMS residual relative to the largest |signal|.
    pub residual_norm: f64,
}

/// `I_mean·(1 + s·c·cos(ω(t − t₀)))` with `c ≥ 0` and `s = ±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiFit {
    pub contrast: f64,
    pub omega: f64,
    pub t0_ns: f64,
    pub i_mean: f64,
    /// `s`: negative when the fringe starts at a minimum.
    pub sign: f64,
    pub residual_norm: f64,
}

impl RabiFit {
    pub fn signed_contrast(&self) -> f64 {
        self.sign * self.contrast
    }
}

fn check_samples(trace: &ExperimentTrace) -> Result<(), LabError> {
    trace.validate()?;
    if trace.len() < MIN_SAMPLES {
        return Err(LabError::InsufficientSamples {
            n: trace.len(),
            need: MIN_SAMPLES,
        });
    }
    Ok(())
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, iters: usize) -> f64 {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Grid scan followed by golden-section refinement between the neighbours
/// of the best grid point. Returns the minimiser and its grid index.
fn scan(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> (f64, usize) {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let k = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map_or(0, |(k, _)| k);
    let lo = grid[k.saturating_sub(1)];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    (golden_min(f, lo, hi, 80), k)
}

/// Levenberg-damped Gauss-Newton. `model` returns residuals and Jacobian of
/// the model (not of the residual).
fn polish(
    y: &[f64],
    mut x: DVector<f64>,
    model: &dyn Fn(&DVector<f64>) -> (DVector<f64>, DMatrix<f64>),
) -> (DVector<f64>, f64) {
    let yv = DVector::from_column_slice(y);
    let sse_of = |x: &DVector<f64>| {
        let (m, j) = model(x);
        let r = &yv - m;
        (r.norm_squared(), r, j)
    };
    let (mut sse, mut r, mut j) = sse_of(&x);
    let mut lambda = 1e-6;
    for _ in 0..100 {
        let jt = j.transpose();
        let mut h = &jt * &j;
        let g = &jt * &r;
        for i in 0..h.nrows() {
            h[(i, i)] *= 1.0 + lambda;
        }
        let Some(step) = h.lu().solve(&g) else { break };
        let trial = &x + &step;
        let (s2, r2, j2) = sse_of(&trial);
        if s2.is_finite() && s2 < sse {
            let gain = sse - s2;
            x = trial;
            sse = s2;
            r = r2;
            j = j2;
            lambda = (lambda * 0.1).max(1e-12);
            if gain <= 1e-15 * sse.max(f64::MIN_POSITIVE) || step.norm() <= 1e-14 * x.norm() {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e8 {
                break;
            }
        }
    }
    (x, sse)
}

fn relative_rms(sse: f64, y: &[f64]) -> f64 {
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        0.0
    } else {
        (sse / y.len() as f64).sqrt() / peak
    }
}

/// Linear amplitude and offset for a fixed decay constant.
fn exp_linear(t: &[f64], y: &[f64], tau: f64) -> Option<(f64, f64, f64)> {
    let n = t.len() as f64;
    let e: Vec<f64> = t.iter().map(|&s| (-s / tau).exp()).collect();
    let (me, my) = (e.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut see, mut sey) = (0.0, 0.0);
    for (ei, yi) in e.iter().zip(y) {
        see += (ei - me) * (ei - me);
        sey += (ei - me) * (yi - my);
    }
    if !(see > 1e-28) {
        return None;
    }
    let a = sey / see;
    let b = my - a * me;
    let sse = e.iter().zip(y).map(|(ei, yi)| (yi - a * ei - b).powi(2)).sum();
    Some((a, b, sse))
}

/// Least-squares `A·exp(−t/τ) + B`.
///
/// A trace without a resolvable decay (flat, or τ beyond fifty times the
/// span) is reported as [`LabError::FitDiverged`].
pub fn fit_single_exponential(trace: &ExperimentTrace) -> Result<ExpFit, LabError> {
    check_samples(trace)?;
    let t0 = trace.times[0];
    let t: Vec<f64> = trace.times.iter().map(|s| s - t0).collect();
    let y = &trace.signal;
    let span = t[t.len() - 1];
    let dt = t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = ((dt / 5.0).ln(), (50.0 * span).ln());
    let grid: Vec<f64> = (0..=240).map(|k| lo + (hi - lo) * f64::from(k) / 240.0).collect();
    let profile = |u: f64| exp_linear(&t, y, u.exp()).map_or(f64::INFINITY, |s| s.2);
    let (u, k) = scan(&profile, &grid);
    let diverged = || LabError::FitDiverged("no resolvable exponential decay".into());
    if k + 1 >= grid.len() {
        return Err(diverged());
    }
    let (a, b, _) = exp_linear(&t, y, u.exp()).ok_or_else(diverged)?;
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if a.abs() <= 1e-12 * peak {
        return Err(diverged());
    }
    let model = |x: &DVector<f64>| {
        let (a, tau, b) = (x[0], x[1], x[2]);
        let mut m = DVector::zeros(t.len());
        let mut j = DMatrix::zeros(t.len(), 3);
        for (i, &s) in t.iter().enumerate() {
            let e = (-s / tau).exp();
            m[i] = a * e + b;
            j[(i, 0)] = e;
            j[(i, 1)] = a * e * s / (tau * tau);
            j[(i, 2)] = 1.0;
        }
        (m, j)
    };
    let (x, sse) = polish(y, DVector::from_vec(vec![a, u.exp(), b]), &model);
    let tau = x[1];
    if !(tau.is_finite() && tau > 0.0 && tau < 50.0 * span) {
        return Err(diverged());
    }
    Ok(ExpFit {
        amplitude: x[0] * (t0 / tau).exp(),
        tau_ns: tau,
        offset: x[2],
        residual_norm: relative_rms(sse, y),
    })
}

/// Time constant of the part of the trace at or after `from_ns`.
pub fn tail_time_constant(trace: &ExperimentTrace, from_ns: f64) -> Result<f64, LabError> {
    Ok(fit_single_exponential(&trace.tail(from_ns))?.tau_ns)
}

/// Mean, cosine and sine coefficients for a fixed ω.
fn fringe_linear(t: &[f64], y: &[f64], w: f64) -> Option<(Vector3<f64>, f64)> {
    let mut h = Matrix3::zeros();
    let mut g = Vector3::zeros();
    for (&s, &v) in t.iter().zip(y) {
        let b = Vector3::new(1.0, (w * s).cos(), (w * s).sin());
        h += b * b.transpose();
        g += b * v;
    }
    let c = h.lu().solve(&g)?;
    let sse = t
        .iter()
        .zip(y)
        .map(|(&s, &v)| (v - c[0] - c[1] * (w * s).cos() - c[2] * (w * s).sin()).powi(2))
        .sum();
    Some((c, sse))
}

/// Least-squares fringe `I_mean·(1 + s·c·cos(ω(t − t₀)))`.
///
/// `t₀` is folded into half a period around zero so that the sign flag
/// records whether the fringe starts near a maximum (`+1`) or a minimum.
pub fn fit_rabi_fringe(trace: &ExperimentTrace) -> Result<RabiFit, LabError> {
    check_samples(trace)?;
    let t = &trace.times;
    let y = &trace.signal;
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var <= 1e-24 * mean * mean {
        if mean <= 0.0 {
            return Err(LabError::FitDiverged("fringe has no positive mean".into()));
        }
        return Ok(RabiFit {
            contrast: 0.0,
            omega: 0.0,
            t0_ns: 0.0,
            i_mean: mean,
            sign: 1.0,
            residual_norm: relative_rms(var * n, y),
        });
    }
    let span = t[t.len() - 1] - t[0];
    let mut dts: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    dts.sort_by(f64::total_cmp);
    let nyquist = std::f64::consts::PI / dts[dts.len() / 2];
    let lo = std::f64::consts::PI / span;
    let step = lo / 4.0;
    let count = ((nyquist - lo) / step).ceil().max(2.0) as usize;
    let grid: Vec<f64> = (0..=count).map(|k| lo + step * k as f64).collect();
    let profile = |w: f64| fringe_linear(t, y, w).map_or(f64::INFINITY, |s| s.1);
    let (w, _) = scan(&profile, &grid);
    let diverged = || LabError::FitDiverged("fringe least squares is singular".into());
    let (c, _) = fringe_linear(t, y, w).ok_or_else(diverged)?;
    let model = |x: &DVector<f64>| {
        let (m, a, b, w) = (x[0], x[1], x[2], x[3]);
        let mut out = DVector::zeros(t.len());
        let mut j = DMatrix::zeros(t.len(), 4);
        for (i, &s) in t.iter().enumerate() {
            let (sn, cs) = (w * s).sin_cos();
            out[i] = m + a * cs + b * sn;
            j[(i, 0)] = 1.0;
            j[(i, 1)] = cs;
            j[(i, 2)] = sn;
            j[(i, 3)] = s * (b * cs - a * sn);
        }
        (out, j)
    };
    let (x, sse) = polish(y, DVector::from_vec(vec![c[0], c[1], c[2], w]), &model);
    let (m, a, b, w) = (x[0], x[1], x[2], x[3].abs());
    let b = if x[3] < 0.0 { -b } else { b };
    if !(m > 0.0 && w.is_finite()) {
        return Err(diverged());
    }
    let periods = w * span / std::f64::consts::TAU;
    if periods < 1.5 {
        return Err(LabError::InsufficientSpan { periods });
    }
    let contrast = a.hypot(b) / m;
    if contrast > 1.0 + 1e-9 {
        return Err(LabError::FitDiverged(format!("fringe contrast {contrast} exceeds 1")));
    }
    let mut phi = b.atan2(a);
    let mut sign = 1.0;
    if phi.abs() > std::f64::consts::FRAC_PI_2 {
        sign = -1.0;
        phi -= std::f64::consts::PI.copysign(phi);
    }
    Ok(RabiFit {
        contrast: contrast.min(1.0),
        omega: w,
        t0_ns: phi / w,
        i_mean: m,
        sign,
        residual_norm: relative_rms(sse, y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::TraceMeta;

    fn trace(t: Vec<f64>, f: impl Fn(f64) -> f64) -> ExperimentTrace {
        let s = t.iter().map(|&x| f(x)).collect();
        ExperimentTrace::new(t, s, TraceMeta::new("synthetic")).unwrap()
    }

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let tr = trace(grid(300, 0.2), |t| 3.0 * (-t / 11.35).exp() + 0.01);
        let f = fit_single_exponential(&tr).unwrap();
        assert!((f.tau_ns / 11.35 - 1.0).abs() < 1e-9, "{f:?}");
        assert!((f.amplitude - 3.0).abs() < 1e-8);
        assert!(f.residual_norm < 1e-8);
    }

    #[test]
    fn late_window_reports_amplitude_at_zero() {
        let t: Vec<f64> = (0..100).map(|k| 5000.0 + 20.0 * f64::from(k)).collect();
        let f = fit_single_exponential(&trace(t, |t| 2.0 * (-t / 2964.0).exp())).unwrap();
        assert!((f.tau_ns / 2964.0 - 1.0).abs() < 1e-8);
        assert!((f.amplitude / 2.0 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_trace_diverges() {
        let tr = trace(grid(50, 1.0), |_| 4.0);
        assert!(matches!(fit_single_exponential(&tr), Err(LabError::FitDiverged(_))));
    }

    #[test]
    fn too_few_samples() {
        let tr = trace(grid(5, 1.0), |t| (-t).exp());
        assert!(matches!(
            fit_single_exponential(&tr),
            Err(LabError::InsufficientSamples { n: 5, .. })
        ));
    }

    #[test]
    fn exact_fringe_is_recovered() {
        let w = std::f64::consts::PI / 100.0;
        let tr = trace(grid(161, 5.0), |t| 2.0 * (1.0 + 0.14 * (w * (t - 7.0)).cos()));
        let f = fit_rabi_fringe(&tr).unwrap();
        assert!((f.contrast - 0.14).abs() < 1e-9, "{f:?}");
        assert!((f.omega / w - 1.0).abs() < 1e-9);
        assert!((f.t0_ns - 7.0).abs() < 1e-6);
        assert_eq!(f.sign, 1.0);
        assert!(f.residual_norm < 1e-8);
    }

    #[test]
    fn flipped_fringe_has_negative_sign() {
        let w = std::f64::consts::PI / 100.0;
        let up = trace(grid(161, 5.0), |t| 1.0 + 0.3 * (w * t).cos());
        let down = trace(grid(161, 5.0), |t| 1.0 - 0.3 * (w * t).cos());
        let (a, b) = (fit_rabi_fringe(&up).unwrap(), fit_rabi_fringe(&down).unwrap());
        assert!((a.contrast - b.contrast).abs() < 1e-9);
        assert_eq!((a.sign, b.sign), (1.0, -1.0));
    }

    #[test]
    fn flat_fringe_has_zero_contrast() {
        let f = fit_rabi_fringe(&trace(grid(40, 5.0), |_| 3.0)).unwrap();
        assert_eq!(f.contrast, 0.0);
        assert_eq!(f.i_mean, 3.0);
    }

    #[test]
    fn short_fringe_is_rejected() {
        let w = std::f64::consts::PI / 100.0;
        let tr = trace(grid(21, 10.0), |t| 1.0 + 0.3 * (w * t).cos());
        assert!(matches!(fit_rabi_fringe(&tr), Err(LabError::InsufficientSpan { .. })));
    }
}
