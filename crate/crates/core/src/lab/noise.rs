use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{ExperimentTrace, LabError};

/// Poisson counts whose mean is the signal rescaled so its maximum equals
/// `peak_counts`.
pub fn add_shot_noise(trace: &ExperimentTrace, peak_counts: f64, seed: u64) -> Result<ExperimentTrace, LabError> {
    if !(peak_counts.is_finite() && peak_counts > 0.0) {
        return Err(LabError::InvalidArgument(format!("peak_counts must be positive, got {peak_counts}")));
    }
    let peak = trace.peak();
    let scale = if peak > 0.0 { peak_counts / peak } else { 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signal = trace
        .signal
        .iter()
        .map(|&s| {
            let lambda = s * scale;
            if lambda > 0.0 {
                Poisson::new(lambda).expect("positive finite mean").sample(&mut rng)
            } else {
                0.0
            }
        })
        .collect();
    let mut meta = trace.meta.clone();
    meta.seed = Some(seed);
    meta.peak_counts = Some(peak_counts);
    ExperimentTrace::new(trace.times.clone(), signal, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::TraceMeta;

    fn ramp() -> ExperimentTrace {
        let t: Vec<f64> = (0..50).map(f64::from).collect();
        let s = t.iter().map(|x| (-x / 10.0).exp()).collect();
        ExperimentTrace::new(t, s, TraceMeta::new("ramp")).unwrap()
    }

    #[test]
    fn same_seed_same_counts() {
        let a = add_shot_noise(&ramp(), 1e3, 7).unwrap();
        let b = add_shot_noise(&ramp(), 1e3, 7).unwrap();
        assert_eq!(a.signal, b.signal);
        assert_ne!(a.signal, add_shot_noise(&ramp(), 1e3, 8).unwrap().signal);
        assert_eq!(a.meta.seed, Some(7));
    }

    #[test]
    fn zero_signal_gives_zero_counts() {
        let t = ExperimentTrace::new(vec![0.0, 1.0], vec![0.0, 0.0], TraceMeta::new("z")).unwrap();
        assert_eq!(add_shot_noise(&t, 100.0, 1).unwrap().signal, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_non_positive_peak() {
        assert!(add_shot_noise(&ramp(), 0.0, 1).is_err());
    }
}
