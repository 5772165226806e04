//! BPSK and Gray-coded QPSK with coherent demodulation.

use crate::channel::{cx_conj, cx_mul, ComplexSignal};
use crate::{Error, Result};

/// Modulation family of a constellation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulation {
    Bpsk,
    Qpsk,
}

/// Bit-pattern -> constellation point table with unit average symbol energy.
#[derive(Clone, Debug)]
pub struct ConstellationMap {
    modulation: Modulation,
    points: Vec<(f64, f64)>,
}

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

impl ConstellationMap {
    pub fn new(modulation: Modulation) -> Self {
        let points = match modulation {
            // Bit 0 -> +1, bit 1 -> -1 on the real axis.
            Modulation::Bpsk => vec![(1.0, 0.0), (-1.0, 0.0)],
            // Gray map: 00 -> (+1+i)/√2, 01 -> (-1+i)/√2,
            //           11 -> (-1-i)/√2, 10 -> (+1-i)/√2.
            Modulation::Qpsk => vec![
                (QPSK_AMP, QPSK_AMP),
                (-QPSK_AMP, QPSK_AMP),
                (QPSK_AMP, -QPSK_AMP),
                (-QPSK_AMP, -QPSK_AMP),
            ],
        };
        ConstellationMap { modulation, points }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self.modulation {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
        }
    }

    /// Point for a bit pattern read big-endian (first bit is the high bit).
    pub fn point(&self, pattern: usize) -> (f64, f64) {
        self.points[pattern]
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Nearest-point decision for an equalized symbol, as a bit pattern.
    /// For unit-energy constellations this maximizes Re(z·conj(c)).
    pub fn slice(&self, z: (f64, f64)) -> usize {
        let mut best = 0;
        let mut best_metric = f64::NEG_INFINITY;
        for (pattern, &c) in self.points.iter().enumerate() {
            let metric = z.0 * c.0 + z.1 * c.1;
            if metric > best_metric {
                best_metric = metric;
                best = pattern;
            }
        }
        best
    }
}

/// Bit 0 -> +1, bit 1 -> -1 on the real axis, one symbol per bit.
pub fn bpsk_modulate(bits: &[u8]) -> Result<ComplexSignal> {
    let map = ConstellationMap::new(Modulation::Bpsk);
    let symbols: Vec<(f64, f64)> = bits
        .iter()
        .map(|&b| {
            if b > 1 {
                Err(Error::contract(format!("bit value {b} is not 0/1")))
            } else {
                Ok(map.point(b as usize))
            }
        })
        .collect::<Result<_>>()?;
    Ok(ComplexSignal::from_complex(&symbols))
}

/// Coherent matched-filter outputs Re(conj(h)·y_t); positive favors bit 0.
///
/// `h` is the (block-constant) fading tap; pass (1, 0) for AWGN-only.
pub fn bpsk_soft_values(y: &ComplexSignal, h: (f64, f64)) -> Vec<f64> {
    (0..y.len_complex())
        .map(|t| cx_mul(cx_conj(h), y.sample(t)).0)
        .collect()
}

/// Coherent hard decisions: bit = 1 iff Re(conj(h)·y_t) < 0.
pub fn bpsk_demodulate(y: &ComplexSignal, h: (f64, f64)) -> Vec<u8> {
    bpsk_soft_values(y, h)
        .into_iter()
        .map(|v| u8::from(v < 0.0))
        .collect()
}

/// Gray-coded QPSK, two bits per symbol, unit symbol energy.
pub fn qpsk_modulate(bits: &[u8]) -> Result<ComplexSignal> {
    if bits.len() % 2 != 0 {
        return Err(Error::contract(format!(
            "QPSK needs an even bit count, got {}",
            bits.len()
        )));
    }
    let map = ConstellationMap::new(Modulation::Qpsk);
    let mut symbols = Vec::with_capacity(bits.len() / 2);
    for pair in bits.chunks_exact(2) {
        if pair[0] > 1 || pair[1] > 1 {
            return Err(Error::contract("bit values must be 0/1"));
        }
        symbols.push(map.point(((pair[0] as usize) << 1) | pair[1] as usize));
    }
    Ok(ComplexSignal::from_complex(&symbols))
}

/// Coherent per-quadrant decisions on conj(h)·y_t.
pub fn qpsk_demodulate(y: &ComplexSignal, h: (f64, f64)) -> Vec<u8> {
    let map = ConstellationMap::new(Modulation::Qpsk);
    let mut bits = Vec::with_capacity(2 * y.len_complex());
    for t in 0..y.len_complex() {
        let z = cx_mul(cx_conj(h), y.sample(t));
        let pattern = map.slice(z);
        bits.push(((pattern >> 1) & 1) as u8);
        bits.push((pattern & 1) as u8);
    }
    bits
}
