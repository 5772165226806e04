//! Systematic Hamming(7,4) block code with hard syndrome decoding and
//! soft maximum-likelihood decoding.

use crate::{Error, Result};

/// Decoding strategy for the Hamming baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HammingDecodeMode {
    /// Syndrome lookup on hard bit decisions; corrects any single bit flip.
    HardSyndrome,
    /// Picks the codeword whose BPSK image best correlates with the soft
    /// channel outputs (block-wise maximum likelihood under AWGN).
    SoftMl,
}

impl HammingDecodeMode {
    pub fn name(self) -> &'static str {
        match self {
            HammingDecodeMode::HardSyndrome => "hard",
            HammingDecodeMode::SoftMl => "soft",
        }
    }
}

impl std::str::FromStr for HammingDecodeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" | "hard-syndrome" => Ok(HammingDecodeMode::HardSyndrome),
            "soft" | "soft-ml" => Ok(HammingDecodeMode::SoftMl),
            other => Err(Error::Config(format!("unknown Hamming decode mode `{other}`"))),
        }
    }
}

/// The (7,4) code in systematic form G = [I₄ | P] with parity rows
/// (1,1,0), (1,0,1), (0,1,1), (1,1,1), and H = [Pᵀ | I₃].
#[derive(Clone, Debug)]
pub struct Hamming74Code {
    generator: [[u8; 7]; 4],
    parity_check: [[u8; 7]; 3],
    /// Syndrome (as a 3-bit value, low bit = first check row) -> flipped
    /// position, or None for the zero syndrome.
    syndrome_table: [Option<usize>; 8],
    /// All 16 codewords indexed by dataword.
    codewords: [[u8; 7]; 16],
}

const PARITY: [[u8; 3]; 4] = [[1, 1, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]];

impl Default for Hamming74Code {
    fn default() -> Self {
        Self::new()
    }
}

impl Hamming74Code {
    pub fn new() -> Self {
        let mut generator = [[0u8; 7]; 4];
        for (r, row) in generator.iter_mut().enumerate() {
            row[r] = 1;
            row[4..].copy_from_slice(&PARITY[r]);
        }
        let mut parity_check = [[0u8; 7]; 3];
        for (c, row) in parity_check.iter_mut().enumerate() {
            for d in 0..4 {
                row[d] = PARITY[d][c];
            }
            row[4 + c] = 1;
        }
        // Each single-bit flip at position j produces syndrome = column j
        // of H; the code is perfect so all 7 nonzero syndromes are distinct.
        let mut syndrome_table = [None; 8];
        for j in 0..7 {
            let mut syn = 0usize;
            for (c, row) in parity_check.iter().enumerate() {
                syn |= (row[j] as usize) << c;
            }
            syndrome_table[syn] = Some(j);
        }
        let mut codewords = [[0u8; 7]; 16];
        for (data, cw) in codewords.iter_mut().enumerate() {
            for (r, row) in generator.iter().enumerate() {
                if (data >> (3 - r)) & 1 == 1 {
                    for (c, g) in cw.iter_mut().zip(row) {
                        *c ^= g;
                    }
                }
            }
        }
        Hamming74Code {
            generator,
            parity_check,
            syndrome_table,
            codewords,
        }
    }

    pub fn generator(&self) -> &[[u8; 7]; 4] {
        &self.generator
    }

    pub fn parity_check(&self) -> &[[u8; 7]; 3] {
        &self.parity_check
    }

    /// Systematic codeword d·G over GF(2).
    pub fn encode(&self, data: &[u8]) -> Result<[u8; 7]> {
        if data.len() != 4 {
            return Err(Error::contract(format!(
                "Hamming(7,4) encodes 4 bits, got {}",
                data.len()
            )));
        }
        let mut idx = 0usize;
        for &b in data {
            if b > 1 {
                return Err(Error::contract(format!("bit value {b} is not 0/1")));
            }
            idx = (idx << 1) | b as usize;
        }
        Ok(self.codewords[idx])
    }

    /// Hard-decision decode: syndrome lookup, flip, extract data bits.
    pub fn decode_hard(&self, received: &[u8]) -> Result<[u8; 4]> {
        if received.len() != 7 {
            return Err(Error::contract(format!(
                "Hamming(7,4) decodes 7 bits, got {}",
                received.len()
            )));
        }
        let mut word = [0u8; 7];
        for (w, &b) in word.iter_mut().zip(received) {
            if b > 1 {
                return Err(Error::contract(format!("bit value {b} is not 0/1")));
            }
            *w = b;
        }
        let mut syn = 0usize;
        for (c, row) in self.parity_check.iter().enumerate() {
            let parity: u8 = row.iter().zip(&word).map(|(h, r)| h & r).fold(0, |a, b| a ^ b);
            syn |= (parity as usize) << c;
        }
        if let Some(pos) = self.syndrome_table[syn] {
            word[pos] ^= 1;
        }
        Ok([word[0], word[1], word[2], word[3]])
    }

    /// Soft maximum-likelihood decode over the 16 codewords.
    ///
    /// `soft` follows the BPSK convention bit 0 -> +1: the winner maximizes
    /// Σ soft_i · (1 - 2 c_i). Exact ties keep the lowest dataword.
    pub fn decode_soft(&self, soft: &[f64]) -> Result<[u8; 4]> {
        if soft.len() != 7 {
            return Err(Error::contract(format!(
                "Hamming(7,4) soft decode needs 7 values, got {}",
                soft.len()
            )));
        }
        let mut best = 0usize;
        let mut best_metric = f64::NEG_INFINITY;
        for (data, cw) in self.codewords.iter().enumerate() {
            let metric: f64 = soft
                .iter()
                .zip(cw)
                .map(|(&v, &c)| if c == 0 { v } else { -v })
                .sum();
            if metric > best_metric {
                best_metric = metric;
                best = data;
            }
        }
        Ok([
            ((best >> 3) & 1) as u8,
            ((best >> 2) & 1) as u8,
            ((best >> 1) & 1) as u8,
            (best & 1) as u8,
        ])
    }

    pub fn codewords(&self) -> &[[u8; 7]; 16] {
        &self.codewords
    }
}
