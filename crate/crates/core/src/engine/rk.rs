//! Adaptive explicit Runge–Kutta integration of the master equation, kept as
//! an independent check on the matrix-exponential propagator.
//!
//! Uses the eighth-order Dormand–Prince pair with the combined 5th/3rd order
//! error estimate. Coordinates are split into blocks that do not interact,
//! and each block gets its own step-size control.

use super::propagate::gather;
use super::{DensityMatrix, EngineError, Liouvillian};

#[derive(Debug, Clone, Copy)]
pub struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for RkOptions {
    fn default() -> Self {
        RkOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

/// Each block spans an invariant set of Hermitian matrices, and the evolution
/// is trace-norm contractive on those. Over the remaining time Δ a coordinate
/// can therefore move by at most `Δ·√12·‖A y‖₂`; integration stops once that
/// bound drops below `rtol`.
const COORD_TO_TRACE_NORM: f64 = 3.4641016151377544;

// Dormand–Prince 8(5,3) tableau (Hairer, Nørsett & Wanner).
const STAGES: usize = 12;

const A: [[f64; 12]; 13] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [
        0.05260015195876773,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.0197250569845379,
        0.0591751709536137,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.02958758547680685,
        0.0,
        0.08876275643042054,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.2413651341592667,
        0.0,
        -0.8845494793282861,
        0.924834003261792,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037037037037037035,
        0.0,
        0.0,
        0.17082860872947386,
        0.12546768756682242,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.037109375,
        0.0,
        0.0,
        0.17025221101954405,
        0.06021653898045596,
        -0.017578125,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.03709200011850479,
        0.0,
        0.0,
        0.17038392571223998,
        0.10726203044637328,
        -0.015319437748624402,
        0.008273789163814023,
        0.0,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.6241109587160757,
        0.0,
        0.0,
        -3.3608926294469414,
        -0.868219346841726,
        27.59209969944671,
        20.154067550477894,
        -43.48988418106996,
        0.0,
        0.0,
        0.0,
        0.0,
    ],
    [
        0.47766253643826434,
        0.0,
        0.0,
        -2.4881146199716677,
        -0.590290826836843,
        21.230051448181193,
        15.279233632882423,
        -33.28821096898486,
        -0.020331201708508627,
        0.0,
        0.0,
        0.0,
    ],
    [
        -0.9371424300859873,
        0.0,
        0.0,
        5.186372428844064,
        1.0914373489967295,
        -8.149787010746927,
        -18.52006565999696,
        22.739487099350505,
        2.4936055526796523,
        -3.0467644718982196,
        0.0,
        0.0,
    ],
    [
        2.273310147516538,
        0.0,
        0.0,
        -10.53449546673725,
        -2.0008720582248625,
        -17.9589318631188,
        27.94888452941996,
        -2.8589982771350235,
        -8.87285693353063,
        12.360567175794303,
        0.6433927460157636,
        0.0,
    ],
    [
        0.054293734116568765,
        0.0,
        0.0,
        0.0,
        0.0,
        4.450312892752409,
        1.8915178993145003,
        -5.801203960010585,
        0.3111643669578199,
        -0.1521609496625161,
        0.20136540080403034,
        0.04471061572777259,
    ],
];
const E3: [f64; 13] = [
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
    0.0,
];
const E5: [f64; 13] = [
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
    0.0,
];

pub fn evolve_rk(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    t: f64,
) -> Result<DensityMatrix, EngineError> {
    evolve_rk_with(rho0, l, t, RkOptions::default())
}

pub fn evolve_rk_with(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    t: f64,
    opts: RkOptions,
) -> Result<DensityMatrix, EngineError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(EngineError::InvalidDuration(t));
    }
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let x0 = rho0.coords();
    let mut x = x0;
    for block in l.components(&l.support(&x0)) {
        let a = l.restrict(&block);
        // row-major copy for the inner products
        let n = block.len();
        let rows: Vec<f64> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)])
            .collect();
        let y0: Vec<f64> = gather(&block, &x0).iter().copied().collect();
        let y = integrate_block(&rows, y0, t, &opts)?;
        for (k, &i) in block.iter().enumerate() {
            x[i] = y[k];
        }
    }
    DensityMatrix::from_coords(&x).clamp_positive()
}

fn matvec(a: &[f64], y: &[f64], out: &mut [f64]) {
    let n = y.len();
    for (i, o) in out.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        *o = row.iter().zip(y).map(|(p, q)| p * q).sum();
    }
}

/// Integrates `y' = A y` over `[0, t]`; `a` is row-major.
fn integrate_block(
    a: &[f64],
    mut y: Vec<f64>,
    t: f64,
    opts: &RkOptions,
) -> Result<Vec<f64>, EngineError> {
    let n = y.len();
    let mut k = vec![vec![0.0; n]; STAGES + 1];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    matvec(a, &y, &mut k[0]);
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
    let mut h = (0.01 / scale).min(t);
    let mut time = 0.0;
    let mut steps = 0usize;

    while time < t {
        let drift = k[0].iter().map(|v| v * v).sum::<f64>().sqrt();
        if COORD_TO_TRACE_NORM * drift * (t - time) <= opts.rtol {
            break;
        }
        if steps >= opts.max_steps {
            return Err(EngineError::IntegrationFailure(format!(
                "step budget exhausted at t = {time} ns"
            )));
        }
        steps += 1;
        let last = time + h >= t;
        if last {
            h = t - time;
        }
        for s in 1..=STAGES {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            if s < STAGES {
                let (_, rest) = k.split_at_mut(s);
                matvec(a, &tmp, &mut rest[0]);
            } else {
                y_new.copy_from_slice(&tmp);
            }
        }
        {
            let (_, rest) = k.split_at_mut(STAGES);
            matvec(a, &y_new, &mut rest[0]);
        }

        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let (mut d5, mut d3) = (0.0, 0.0);
            for (j, kj) in k.iter().enumerate() {
                d5 += E5[j] * kj[i];
                d3 += E3[j] * kj[i];
            }
            e5 = f64::max(e5, (d5 / sc).powi(2));
            e3 = f64::max(e3, (d3 / sc).powi(2));
        }
        // max-norm version of the combined estimate
        let err = if e5 == 0.0 && e3 == 0.0 {
            0.0
        } else {
            h * e5 / (e5 + 0.01 * e3).sqrt()
        };
        if !err.is_finite() {
            return Err(EngineError::IntegrationFailure(
                "non-finite error estimate".into(),
            ));
        }
        if err <= 1.0 {
            time = if last { t } else { time + h };
            std::mem::swap(&mut y, &mut y_new);
            let (first, rest) = k.split_at_mut(STAGES);
            first[0].copy_from_slice(&rest[0]);
        }
        let factor = if err == 0.0 {
            10.0
        } else {
            (0.9 * err.powf(-1.0 / 8.0)).clamp(0.2, 10.0)
        };
        h *= factor;
        if h < 1e-14 * t.max(1.0) {
            return Err(EngineError::IntegrationFailure(format!(
                "step size underflow at t = {time} ns"
            )));
        }
    }
    Ok(y)
}
