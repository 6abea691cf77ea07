//! Ideal state-vector model of the time-bin protocol.
//!
//! Basis index: bit 0 is the spin (0 = g₁, 1 = g₂); bit `1 + 2k` is the
//! early bin of photon k and bit `2 + 2k` its late bin (occupation 0 or 1).

use nalgebra::Complex;

use super::budget::FinalGate;
use super::GhzError;

pub type C64 = Complex<f64>;

/// Largest photon number accepted by [`simulate_ideal_protocol`].
pub const MAX_PHOTONS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bin {
    Early,
    Late,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    n: usize,
    amps: Vec<C64>,
}

fn bin_bit(k: usize, b: Bin) -> usize {
    match b {
        Bin::Early => 1 << (1 + 2 * k),
        Bin::Late => 1 << (2 + 2 * k),
    }
}

impl ProtocolState {
    fn initial(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << (1 + 2 * n)];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = C64::new(h, 0.0);
        amps[1] = C64::new(h, 0.0);
        ProtocolState { n, amps }
    }

    pub fn photons(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Amplitude of spin `g2` (false = g₁) with photon k in `bins[k]`.
    pub fn amplitude(&self, g2: bool, bins: &[Bin]) -> C64 {
        assert_eq!(bins.len(), self.n);
        let idx = bins
            .iter()
            .enumerate()
            .fold(g2 as usize, |acc, (k, &b)| acc | bin_bit(k, b));
        self.amps[idx]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Expected total occupation summed over all bins.
    pub fn mean_photon_number(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * (i >> 1).count_ones() as f64)
            .sum()
    }

    /// `|⟨self|other⟩|²`
    pub fn overlap(&self, other: &ProtocolState) -> f64 {
        assert_eq!(self.n, other.n);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    }

    /// Exchanges early and late bins of every photon and g₁ with g₂.
    pub fn flipped(&self) -> ProtocolState {
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let mut j = i ^ 1;
            for k in 0..self.n {
                let (e, l) = (bin_bit(k, Bin::Early), bin_bit(k, Bin::Late));
                let (has_e, has_l) = (i & e != 0, i & l != 0);
                j &= !(e | l);
                if has_e {
                    j |= l;
                }
                if has_l {
                    j |= e;
                }
            }
            out[j] = a;
        }
        ProtocolState { n: self.n, amps: out }
    }

    /// Amplitudes on N + 1 qubits (photons 1..N, then the spin), with
    /// photon k read as 1 when it sits in its early bin and 0 when late.
    /// The most significant bit is photon 1. Fails if any photon is not in
    /// exactly one bin.
    pub fn qubit_amplitudes(&self) -> Result<Vec<C64>, GhzError> {
        let mut out = vec![C64::new(0.0, 0.0); 1 << (self.n + 1)];
        for (i, &a) in self.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let mut q = 0usize;
            for k in 0..self.n {
                let e = i & bin_bit(k, Bin::Early) != 0;
                let l = i & bin_bit(k, Bin::Late) != 0;
                if e == l {
                    return Err(GhzError::NotDualRail(k + 1));
                }
                q = (q << 1) | e as usize;
            }
            out[(q << 1) | (i & 1)] = a;
        }
        Ok(out)
    }

    // -- operations --------------------------------------------------------

    /// O2 π-pulse on g₂ followed by emission into `bin` of photon `k`.
    fn emit_from_g2(&mut self, k: usize, b: Bin) {
        let bit = bin_bit(k, b);
        for i in 0..self.amps.len() {
            if i & 1 == 1 && i & bit == 0 {
                self.amps.swap(i, i | bit);
            }
        }
    }

    fn spin_gate(&mut self, u: [[C64; 2]; 2]) {
        for i in (0..self.amps.len()).step_by(2) {
            let (a, b) = (self.amps[i], self.amps[i + 1]);
            self.amps[i] = u[0][0] * a + u[0][1] * b;
            self.amps[i + 1] = u[1][0] * a + u[1][1] * b;
        }
    }
}

fn pauli_x() -> [[C64; 2]; 2] {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    [[z, o], [o, z]]
}

fn hadamard() -> [[C64; 2]; 2] {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

/// Runs N periods of: early emission from g₂, microwave π swap, late
/// emission from g₂, final spin gate.
pub fn simulate_ideal_protocol(n: usize, gate: FinalGate) -> Result<ProtocolState, GhzError> {
    if n == 0 || n > MAX_PHOTONS {
        return Err(GhzError::InvalidConfig(format!(
            "photon number must lie in 1..={MAX_PHOTONS}, got {n}"
        )));
    }
    let mut s = ProtocolState::initial(n);
    let r = match gate {
        FinalGate::X => pauli_x(),
        FinalGate::Hadamard => hadamard(),
    };
    for k in 0..n {
        s.emit_from_g2(k, Bin::Early);
        s.spin_gate(pauli_x());
        s.emit_from_g2(k, Bin::Late);
        s.spin_gate(r);
    }
    Ok(s)
}
