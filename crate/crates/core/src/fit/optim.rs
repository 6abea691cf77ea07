//! Derivative-free optimizers, generic over the scalar type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    /// Iteration budget exhausted; the result is the best point seen.
    MaxIterReached,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    /// Mean normalised spread of the final population (differential
    /// evolution only).
    pub diversity: Option<T>,
}

fn finite_or_inf<T: Real>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

fn clip<T: Real>(x: &mut [T], bounds: Option<&[(T, T)]>) {
    if let Some(b) = bounds {
        for (v, &(lo, hi)) in x.iter_mut().zip(b) {
            *v = v.max(lo).min(hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions<T> {
    pub max_iter: usize,
    /// Largest vertex distance (max-norm) from the best vertex.
    pub xtol: T,
    /// Spread between worst and best vertex values.
    pub ftol: T,
    /// Initial edge relative to |x0ᵢ|; `zero_step` is used for zero entries.
    pub rel_step: T,
    pub zero_step: T,
    pub bounds: Option<Vec<(T, T)>>,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 20_000,
            xtol: T::lit(1e-10),
            ftol: T::lit(1e-12),
            rel_step: T::lit(0.05),
            zero_step: T::lit(0.00025),
            bounds: None,
        }
    }
}

/// Nelder-Mead simplex with reflection 1, expansion 2, contraction 0.5 and
/// shrink 0.5. Converged once both the simplex size and the value spread are
/// below their tolerances. With bounds, trial points are projected onto the
/// box.
pub fn nelder_mead<T: Real>(
    f: impl Fn(&[T]) -> T,
    x0: &[T],
    opts: &NelderMeadOptions<T>,
) -> OptimResult<T> {
    let n = x0.len();
    let bounds = opts.bounds.as_deref();
    let mut evals = 0usize;
    let mut eval = |x: &[T]| {
        evals += 1;
        finite_or_inf(f(x))
    };
    let mut start = x0.to_vec();
    clip(&mut start, bounds);
    if n == 0 {
        let v = eval(&start);
        return OptimResult {
            x: start,
            f: v,
            iterations: 0,
            evaluations: 1,
            termination: Termination::Converged,
            diversity: None,
        };
    }
    let mut simplex: Vec<Vec<T>> = vec![start.clone()];
    for i in 0..n {
        let mut v = start.clone();
        let mut h = if v[i] == T::zero() { opts.zero_step } else { opts.rel_step * v[i].abs() };
        if let Some(b) = bounds {
            let (lo, hi) = b[i];
            if v[i] + h > hi {
                h = -h;
            }
            if v[i] + h < lo {
                h = (hi - lo) / T::lit(2.0) * if v[i] - lo > hi - v[i] { -T::one() } else { T::one() };
            }
        }
        v[i] = v[i] + h;
        clip(&mut v, bounds);
        simplex.push(v);
    }
    let mut fv: Vec<T> = simplex.iter().map(|x| eval(x)).collect();
    let (one, two, half) = (T::one(), T::lit(2.0), T::lit(0.5));
    let mut iterations = 0;
    let mut termination = Termination::MaxIterReached;
    let mut order: Vec<usize> = (0..=n).collect();
    while iterations < opts.max_iter {
        order.sort_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        fv = order.iter().map(|&k| fv[k]).collect();
        order = (0..=n).collect();
        let size = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        let spread = fv[n] - fv[0];
        if size <= opts.xtol && spread <= opts.ftol {
            termination = Termination::Converged;
            break;
        }
        iterations += 1;
        let inv = one / T::lit(n as f64);
        let centroid: Vec<T> = (0..n)
            .map(|j| simplex[..n].iter().fold(T::zero(), |s, v| s + v[j]) * inv)
            .collect();
        let along = |t: T| {
            let mut p: Vec<T> = centroid
                .iter()
                .zip(&simplex[n])
                .map(|(&c, &w)| c + t * (c - w))
                .collect();
            clip(&mut p, bounds);
            p
        };
        let xr = along(one);
        let fr = eval(&xr);
        if fr < fv[0] {
            let xe = along(two);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                fv[n] = fe;
            } else {
                simplex[n] = xr;
                fv[n] = fr;
            }
            continue;
        }
        // Ties accept the reflection, so an exactly flat region keeps the
        // simplex moving instead of shrinking it onto a spurious optimum.
        if fr <= fv[n - 1] {
            simplex[n] = xr;
            fv[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < fv[n] {
            let xc = along(half);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-half);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fv[n].min(fr) {
            simplex[n] = xc;
            fv[n] = fc;
            continue;
        }
        for k in 1..=n {
            let v: Vec<T> = simplex[k]
                .iter()
                .zip(&simplex[0])
                .map(|(&a, &b)| b + half * (a - b))
                .collect();
            fv[k] = eval(&v);
            simplex[k] = v;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| fv[a].partial_cmp(&fv[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    OptimResult {
        x: simplex[best].clone(),
        f: fv[best],
        iterations,
        evaluations: evals,
        termination,
        diversity: None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOptions<T> {
    /// Population size per dimension.
    pub pop_factor: usize,
    pub mutation: T,
    pub crossover: T,
    pub max_generations: usize,
    /// Stop when the population's value spread falls below
    /// `atol + tol·|mean|`.
    pub tol: T,
    pub atol: T,
    pub polish: bool,
    pub parallel: bool,
}

impl<T: Real> Default for DeOptions<T> {
    fn default() -> Self {
        DeOptions {
            pop_factor: 15,
            mutation: T::lit(0.7),
            crossover: T::lit(0.9),
            max_generations: 1000,
            tol: T::lit(0.01),
            atol: T::zero(),
            polish: true,
            parallel: true,
        }
    }
}

/// rand/1/bin differential evolution inside `bounds`.
///
/// Trial vectors of a generation are drawn sequentially from a ChaCha stream
/// and evaluated as a batch, so the result depends only on `seed`, never on
/// how many threads evaluate the batch. The best member is polished with
/// [`nelder_mead`] when `opts.polish` is set.
pub fn differential_evolution<T, F>(f: F, bounds: &[(T, T)], seed: u64, opts: &DeOptions<T>) -> OptimResult<T>
where
    T: Real,
    F: Fn(&[T]) -> T + Sync,
{
    let dim = bounds.len();
    let np = (opts.pop_factor * dim).max(5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lit = |x: f64| T::lit(x);
    let batch = |xs: &[Vec<T>]| -> Vec<T> {
        if opts.parallel {
            xs.par_iter().map(|x| finite_or_inf(f(x))).collect()
        } else {
            xs.iter().map(|x| finite_or_inf(f(x))).collect()
        }
    };

    // Latin hypercube start.
    let mut pop = vec![vec![T::zero(); dim]; np];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..np).collect();
        for k in (1..np).rev() {
            strata.swap(k, rng.random_range(0..=k));
        }
        for (i, s) in strata.into_iter().enumerate() {
            let u = (s as f64 + rng.random::<f64>()) / np as f64;
            pop[i][j] = lo + (hi - lo) * lit(u);
        }
    }
    let mut fit = batch(&pop);
    let mut evaluations = np;
    let mut generations = 0;
    let mut termination = Termination::MaxIterReached;
    let converged = |fit: &[T]| {
        if fit.iter().any(|v| v.is_infinite()) {
            return false;
        }
        let m = fit.iter().fold(T::zero(), |s, &v| s + v) / lit(np as f64);
        let var = fit.iter().fold(T::zero(), |s, &v| s + (v - m) * (v - m)) / lit(np as f64);
        var.sqrt() <= opts.atol + opts.tol * m.abs()
    };
    if dim == 0 || bounds.iter().all(|&(lo, hi)| lo == hi) {
        termination = Termination::Converged;
    } else {
        while generations < opts.max_generations {
            if converged(&fit) {
                termination = Termination::Converged;
                break;
            }
            generations += 1;
            let trials: Vec<Vec<T>> = (0..np)
                .map(|i| {
                    let mut pick = || loop {
                        let r = rng.random_range(0..np);
                        if r != i {
                            break r;
                        }
                    };
                    let r1 = pick();
                    let r2 = loop {
                        let r = pick();
                        if r != r1 {
                            break r;
                        }
                    };
                    let r3 = loop {
                        let r = pick();
                        if r != r1 && r != r2 {
                            break r;
                        }
                    };
                    let jrand = rng.random_range(0..dim);
                    (0..dim)
                        .map(|j| {
                            let (lo, hi) = bounds[j];
                            let cross = j == jrand || lit(rng.random::<f64>()) < opts.crossover;
                            if !cross {
                                return pop[i][j];
                            }
                            let v = pop[r1][j] + opts.mutation * (pop[r2][j] - pop[r3][j]);
                            if v < lo || v > hi {
                                lo + (hi - lo) * lit(rng.random::<f64>())
                            } else {
                                v
                            }
                        })
                        .collect()
                })
                .collect();
            let ft = batch(&trials);
            evaluations += np;
            for (i, (x, v)) in trials.into_iter().zip(ft).enumerate() {
                if v <= fit[i] {
                    pop[i] = x;
                    fit[i] = v;
                }
            }
        }
    }
    let best = (0..np)
        .min_by(|&a, &b| fit[a].partial_cmp(&fit[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let diversity = (0..dim)
        .map(|j| {
            let (lo, hi) = bounds[j];
            if hi == lo {
                return T::zero();
            }
            let m = pop.iter().fold(T::zero(), |s, x| s + x[j]) / lit(np as f64);
            let v = pop.iter().fold(T::zero(), |s, x| s + (x[j] - m) * (x[j] - m)) / lit(np as f64);
            v.sqrt() / (hi - lo)
        })
        .fold(T::zero(), |s, v| s + v)
        / lit(dim.max(1) as f64);
    let mut out = OptimResult {
        x: pop[best].clone(),
        f: fit[best],
        iterations: generations,
        evaluations,
        termination,
        diversity: Some(diversity),
    };
    if opts.polish && dim > 0 {
        let nm = nelder_mead(
            &f,
            &out.x,
            &NelderMeadOptions {
                bounds: Some(bounds.to_vec()),
                max_iter: 400 * dim,
                ..NelderMeadOptions::default()
            },
        );
        out.evaluations += nm.evaluations;
        if nm.f < out.f {
            out.x = nm.x;
            out.f = nm.f;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2)
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn bowl_in_five_dimensions() {
        let bowl = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * (v - 0.5).powi(2)).sum();
        let r = nelder_mead(bowl, &[2.0, -1.0, 0.3, 4.0, 1.0], &NelderMeadOptions::default());
        assert!(r.f < 1e-8);
        assert!(r.x.iter().all(|v| (v - 0.5).abs() < 1e-6));
    }

    #[test]
    fn f32_bowl() {
        let opts = NelderMeadOptions::<f32> {
            xtol: 1e-5,
            ftol: 1e-7,
            ..NelderMeadOptions::default()
        };
        let r = nelder_mead(|x: &[f32]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2), &[0.0, 0.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] + 2.0).abs() < 1e-3);
    }

    #[test]
    fn receding_plateau_exhausts_the_budget() {
        let opts = NelderMeadOptions {
            max_iter: 500,
            ..NelderMeadOptions::default()
        };
        let r = nelder_mead(|x: &[f64]| (-x[0] - x[1]).exp(), &[50.0, 50.0], &opts);
        assert_eq!(r.termination, Termination::MaxIterReached);
        assert_eq!(r.iterations, 500);
        let flat = nelder_mead(|x: &[f64]| if x[0].abs() < 1e3 { 2.0 } else { 3.0 }, &[1.0, 1.0], &opts);
        assert_eq!(flat.termination, Termination::MaxIterReached);
        assert_eq!(flat.f, 2.0);
    }

    #[test]
    fn bounds_are_respected() {
        let opts = NelderMeadOptions {
            bounds: Some(vec![(1.0, 3.0)]),
            ..NelderMeadOptions::default()
        };
        let r = nelder_mead(|x: &[f64]| x[0] * x[0], &[2.0], &opts);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn de_is_seed_deterministic_across_batch_modes() {
        let b = vec![(-2.0, 2.0); 3];
        let f = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let par = differential_evolution(f, &b, 9, &DeOptions::default());
        let seq = differential_evolution(
            f,
            &b,
            9,
            &DeOptions {
                parallel: false,
                ..DeOptions::default()
            },
        );
        assert_eq!(par, seq);
        assert_eq!(par, differential_evolution(f, &b, 9, &DeOptions::default()));
    }

    #[test]
    fn collapsed_bounds_return_the_point() {
        let r = differential_evolution(|x: &[f64]| x[0] + x[1], &[(1.5, 1.5), (-2.0, -2.0)], 0, &DeOptions::default());
        assert_eq!(r.x, vec![1.5, -2.0]);
        assert_eq!(r.f, -0.5);
    }
}
