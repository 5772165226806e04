//! Closed-form BER references for the theory-anchored checks.

/// Gaussian tail probability Q(x) = P(Z > x), via the complementary error
/// function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Uncoded coherent BPSK over AWGN: Q(sqrt(2 γ)) with γ = 10^(EbN0/10).
pub fn theory_ber_bpsk_awgn(ebn0_db: f64) -> f64 {
    let gamma = 10f64.powf(ebn0_db / 10.0);
    q_function((2.0 * gamma).sqrt())
}

/// Uncoded coherent BPSK over unit-mean-square Rayleigh fading:
/// 0.5 (1 - sqrt(γ̄ / (1 + γ̄))).
pub fn theory_ber_bpsk_rayleigh(ebn0_db: f64) -> f64 {
    let gamma = 10f64.powf(ebn0_db / 10.0);
    0.5 * (1.0 - (gamma / (1.0 + gamma)).sqrt())
}

/// Hamming(7,4) hard-decision block error rate over AWGN.
///
/// A perfect single-error-correcting code fails exactly when two or more of
/// the seven coded bits are flipped: 1 - (1-p)⁷ - 7p(1-p)⁶ with the raw
/// channel bit error p = Q(sqrt(2 R γ)), R = 4/7.
pub fn hamming74_hard_bler_awgn(ebn0_db: f64) -> f64 {
    let gamma = 10f64.powf(ebn0_db / 10.0);
    let p = q_function((2.0 * (4.0 / 7.0) * gamma).sqrt());
    1.0 - (1.0 - p).powi(7) - 7.0 * p * (1.0 - p).powi(6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awgn_limit_and_spot_values() {
        assert!((theory_ber_bpsk_awgn(-100.0) - 0.5).abs() < 1e-3);
        // 0 dB -> Q(sqrt 2) ≈ 0.0786.
        assert!((theory_ber_bpsk_awgn(0.0) - 0.0786).abs() < 5e-4);
        // 4 dB -> ≈ 0.01250.
        assert!((theory_ber_bpsk_awgn(4.0) - 0.01250).abs() < 5e-5);
    }

    #[test]
    fn awgn_strictly_decreasing() {
        // Above ~27 dB the tail underflows f64 to exactly zero, so restrict
        // the strictness check to the representable range.
        let mut prev = f64::INFINITY;
        for db in -20..=24 {
            let ber = theory_ber_bpsk_awgn(db as f64);
            assert!(ber < prev, "{db} dB: {ber} !< {prev}");
            prev = ber;
        }
    }

    #[test]
    fn rayleigh_limit_and_spot_values() {
        assert!((theory_ber_bpsk_rayleigh(-200.0) - 0.5).abs() < 1e-6);
        // 10 dB -> 0.5 (1 - sqrt(10/11)) ≈ 0.02327.
        assert!((theory_ber_bpsk_rayleigh(10.0) - 0.02327).abs() < 5e-6);
    }

    #[test]
    fn rayleigh_high_snr_asymptote() {
        // BER -> 1/(4 γ̄) at high SNR; within 2% at 40 dB.
        let gamma = 10f64.powf(4.0);
        let ratio = theory_ber_bpsk_rayleigh(40.0) / (1.0 / (4.0 * gamma));
        assert!((ratio - 1.0).abs() < 0.02, "ratio {ratio}");
    }

    #[test]
    fn q_function_reference_points() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        // Q(1) ≈ 0.158655, Q(3) ≈ 1.3499e-3.
        assert!((q_function(1.0) - 0.158655).abs() < 1e-6);
        assert!((q_function(3.0) - 1.3499e-3).abs() < 1e-7);
    }

    #[test]
    fn hamming_bler_between_zero_and_raw_union_bound() {
        for db in [0.0, 3.0, 6.0] {
            let bler = hamming74_hard_bler_awgn(db);
            assert!(bler > 0.0 && bler < 1.0);
            // Never worse than 21 p² (union bound over pairs of flips).
            let gamma = 10f64.powf(db / 10.0);
            let p = q_function((2.0 * (4.0 / 7.0) * gamma).sqrt());
            assert!(bler <= 21.0 * p * p + 1e-12);
        }
    }
}
