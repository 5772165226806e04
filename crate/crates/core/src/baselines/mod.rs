//! Conventional transceiver chains and closed-form BER references used to
//! benchmark the learned systems.

mod hamming;
mod mimo_detect;
mod modulation;
mod theory;

pub use hamming::{Hamming74Code, HammingDecodeMode};
pub use mimo_detect::{mimo_ml_detect, mimo_zf_detect};
pub use modulation::{
    bpsk_demodulate, bpsk_modulate, bpsk_soft_values, qpsk_demodulate, qpsk_modulate,
    ConstellationMap, Modulation,
};
pub use theory::{
    hamming74_hard_bler_awgn, q_function, theory_ber_bpsk_awgn, theory_ber_bpsk_rayleigh,
};
