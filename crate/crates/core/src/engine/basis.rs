//! Real coordinates for Hermitian 6×6 matrices.
//!
//! Coordinate `i < 6` is the population ρ_ii. The remaining 30 coordinates
//! hold `Re ρ_ij, Im ρ_ij` for each pair `i < j` in lexicographic order.

use nalgebra::{Complex, Matrix6, SVector};

pub const N_LEVELS: usize = 6;
pub const DIM: usize = 36;

pub type C64 = Complex<f64>;
pub type Coords = SVector<f64, DIM>;

const fn pair_table() -> [(usize, usize); 15] {
    let mut t = [(0, 0); 15];
    let mut k = 0;
    let mut i = 0;
    while i < N_LEVELS {
        let mut j = i + 1;
        while j < N_LEVELS {
            t[k] = (i, j);
            k += 1;
            j += 1;
        }
        i += 1;
    }
    t
}

pub(crate) const PAIRS: [(usize, usize); 15] = pair_table();

/// Reads the coordinates of `m`, using its diagonal and upper triangle.
pub fn to_coords(m: &Matrix6<C64>) -> Coords {
    let mut x = Coords::zeros();
    for i in 0..N_LEVELS {
        x[i] = m[(i, i)].re;
    }
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        x[N_LEVELS + 2 * k] = m[(i, j)].re;
        x[N_LEVELS + 2 * k + 1] = m[(i, j)].im;
    }
    x
}

pub fn from_coords(x: &Coords) -> Matrix6<C64> {
    let mut m = Matrix6::zeros();
    for i in 0..N_LEVELS {
        m[(i, i)] = C64::new(x[i], 0.0);
    }
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        let z = C64::new(x[N_LEVELS + 2 * k], x[N_LEVELS + 2 * k + 1]);
        m[(i, j)] = z;
        m[(j, i)] = z.conj();
    }
    m
}

/// Hermitian matrix whose coordinates are the unit vector `c`.
pub(crate) fn basis_matrix(c: usize) -> Matrix6<C64> {
    let mut x = Coords::zeros();
    x[c] = 1.0;
    from_coords(&x)
}

pub fn coords_trace(x: &Coords) -> f64 {
    x.rows(0, N_LEVELS).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_round_trip() {
        let x = Coords::from_fn(|i, _| (i as f64 * 0.37).sin());
        assert_eq!(to_coords(&from_coords(&x)), x);
        let m = basis_matrix(7);
        assert_eq!(m[(0, 1)], C64::new(0.0, 1.0));
        assert_eq!(m[(1, 0)], C64::new(0.0, -1.0));
    }
}
