//! Elementary layer operations and their reverse-mode rules.

use super::{DenseLayerParams, Message, ProbabilityVector};
use crate::{Error, Result};

/// Probability floor used by [`cross_entropy`] to avoid -log(0).
pub const PROB_FLOOR: f64 = 1e-12;

/// W·x + b.
pub fn affine_forward(params: &DenseLayerParams, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != params.in_width() {
        return Err(Error::contract(format!(
            "affine input length {} != in_width {}",
            x.len(),
            params.in_width()
        )));
    }
    Ok(affine_forward_unchecked(params, x))
}

pub(super) fn affine_forward_unchecked(params: &DenseLayerParams, x: &[f64]) -> Vec<f64> {
    let (w, b) = (params.weights(), params.bias());
    let in_w = params.in_width();
    let mut out = Vec::with_capacity(params.out_width());
    for o in 0..params.out_width() {
        let row = &w[o * in_w..(o + 1) * in_w];
        let mut acc = b[o];
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        out.push(acc);
    }
    out
}

/// Elementwise max(0, x).
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// Gradient passes where the forward output was positive, zero elsewhere
/// (subgradient 0 at exactly 0).
pub fn relu_backward(output: &[f64], g: &[f64]) -> Vec<f64> {
    debug_assert_eq!(output.len(), g.len());
    output
        .iter()
        .zip(g)
        .map(|(&o, &gi)| if o > 0.0 { gi } else { 0.0 })
        .collect()
}

/// Max-shifted softmax: p_i = exp(z_i - max z) / Σ_j exp(z_j - max z).
pub fn softmax(z: &[f64]) -> Result<ProbabilityVector> {
    if z.is_empty() {
        return Err(Error::contract("softmax input must be non-empty"));
    }
    if !z.iter().all(|v| v.is_finite()) {
        return Err(Error::contract("softmax input must be finite"));
    }
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    ProbabilityVector::new(exps.into_iter().map(|e| e / sum).collect())
}

/// Transposed softmax Jacobian applied to an upstream gradient:
/// (Jᵀ g)_i = p_i (g_i - Σ_j p_j g_j).
pub fn softmax_backward(p: &[f64], g: &[f64]) -> Vec<f64> {
    debug_assert_eq!(p.len(), g.len());
    let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
    p.iter().zip(g).map(|(&pi, &gi)| pi * (gi - dot)).collect()
}

/// Result of one cross-entropy evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossEntropyLoss {
    /// -log(max(p_s, floor)), always >= 0.
    pub loss: f64,
    /// True when p_s fell below the floor and was clamped.
    pub saturated: bool,
}

/// -log(p_s) for the true message s, clamped at [`PROB_FLOOR`].
pub fn cross_entropy(p: &ProbabilityVector, s: Message) -> Result<CrossEntropyLoss> {
    if s >= p.len() {
        return Err(Error::contract(format!(
            "message {s} out of range for {} classes",
            p.len()
        )));
    }
    let ps = p.as_slice()[s];
    if ps < PROB_FLOOR {
        Ok(CrossEntropyLoss {
            loss: -PROB_FLOOR.ln(),
            saturated: true,
        })
    } else {
        Ok(CrossEntropyLoss {
            loss: -ps.ln(),
            saturated: false,
        })
    }
}

/// x = sqrt(N) r / ||r||₂ with N = length(r), so ||x||₂² = N exactly.
pub fn power_normalize(r: &[f64]) -> Result<Vec<f64>> {
    let norm_sq: f64 = r.iter().map(|v| v * v).sum();
    if norm_sq == 0.0 {
        return Err(Error::DegenerateInput(
            "cannot power-normalize the zero vector".into(),
        ));
    }
    let scale = (r.len() as f64 / norm_sq).sqrt();
    Ok(r.iter().map(|&v| scale * v).collect())
}

/// Reverse-mode rule for [`power_normalize`]: the (symmetric) Jacobian
/// sqrt(N) (I/||r|| - r rᵀ/||r||³) applied to the upstream gradient.
pub fn power_normalize_backward(r: &[f64], g: &[f64]) -> Vec<f64> {
    debug_assert_eq!(r.len(), g.len());
    let norm_sq: f64 = r.iter().map(|v| v * v).sum();
    let norm = norm_sq.sqrt();
    let scale = (r.len() as f64).sqrt();
    let dot: f64 = r.iter().zip(g).map(|(a, b)| a * b).sum();
    r.iter()
        .zip(g)
        .map(|(&ri, &gi)| scale * (gi / norm - ri * dot / (norm_sq * norm)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn affine_identity_case() {
        let p = DenseLayerParams::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(affine_forward(&p, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn affine_direct_arithmetic() {
        let p = DenseLayerParams::new(2, 2, vec![1.0, 1.0, 0.0, 1.0], vec![1.0, -1.0]).unwrap();
        assert_eq!(affine_forward(&p, &[2.0, 3.0]).unwrap(), vec![6.0, 2.0]);
    }

    #[test]
    fn affine_zero_input_returns_bias() {
        let p = DenseLayerParams::new(3, 2, vec![0.5; 6], vec![0.25, -0.75]).unwrap();
        assert_eq!(affine_forward(&p, &[0.0, 0.0, 0.0]).unwrap(), vec![0.25, -0.75]);
    }

    #[test]
    fn affine_shape_mismatch_is_error() {
        let p = DenseLayerParams::zeros(3, 2);
        assert!(affine_forward(&p, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn relu_cases() {
        assert_eq!(relu(&[-1.0, 0.0, 2.0]), vec![0.0, 0.0, 2.0]);
        assert_eq!(relu(&[-3.0, -0.1]), vec![0.0, 0.0]);
        assert_eq!(relu(&[0.5, 1.5]), vec![0.5, 1.5]);
    }

    #[test]
    fn relu_backward_masks_nonpositive() {
        let out = relu(&[-1.0, 0.0, 2.0]);
        assert_eq!(relu_backward(&out, &[10.0, 10.0, 10.0]), vec![0.0, 0.0, 10.0]);
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let p = softmax(&[0.0; 4]).unwrap();
        for &v in p.as_slice() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_direct_evaluation() {
        let p = softmax(&[1f64.ln(), 2f64.ln(), 3f64.ln()]).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0];
        for (a, b) in p.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_rejects_non_finite() {
        assert!(softmax(&[f64::INFINITY, 0.0]).is_err());
        assert!(softmax(&[f64::NAN]).is_err());
        assert!(softmax(&[]).is_err());
    }

    #[test]
    fn cross_entropy_uniform_is_log_m() {
        let p = ProbabilityVector::new(vec![1.0 / 16.0; 16]).unwrap();
        for s in 0..16 {
            let ce = cross_entropy(&p, s).unwrap();
            assert!((ce.loss - 16f64.ln()).abs() < 1e-12);
            assert!(!ce.saturated);
        }
    }

    #[test]
    fn cross_entropy_perfect_prediction_is_zero() {
        let mut v = vec![0.0; 4];
        v[2] = 1.0;
        let p = ProbabilityVector::new(v).unwrap();
        assert_eq!(cross_entropy(&p, 2).unwrap().loss, 0.0);
    }

    #[test]
    fn cross_entropy_clamps_and_flags_zero_probability() {
        let mut v = vec![0.0; 4];
        v[0] = 1.0;
        let p = ProbabilityVector::new(v).unwrap();
        let ce = cross_entropy(&p, 3).unwrap();
        assert!(ce.saturated);
        assert!((ce.loss - (-PROB_FLOOR.ln())).abs() < 1e-9);
    }

    #[test]
    fn cross_entropy_rejects_out_of_range_message() {
        let p = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        assert!(cross_entropy(&p, 2).is_err());
    }

    #[test]
    fn power_normalize_eq7_arithmetic() {
        let x = power_normalize(&[3.0, 4.0]).unwrap();
        assert!((x[0] - 0.6 * 2f64.sqrt()).abs() < 1e-12);
        assert!((x[1] - 0.8 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn power_normalize_fixed_point() {
        let r = vec![1.0, -1.0, 1.0, -1.0];
        let x = power_normalize(&r).unwrap();
        for (a, b) in x.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn power_normalize_zero_vector_is_degenerate() {
        assert!(matches!(
            power_normalize(&[0.0, 0.0]),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn power_normalize_energy_property_sweep() {
        let mut rng = stream_rng(20, 0, 0);
        for _ in 0..1000 {
            let width = 2 + (rng.gen::<usize>() % 30);
            let r: Vec<f64> = (0..width).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let x = power_normalize(&r).unwrap();
            let energy: f64 = x.iter().map(|v| v * v).sum();
            assert!((energy - width as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn power_normalize_backward_matches_finite_differences() {
        let mut rng = stream_rng(21, 0, 0);
        let r: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let g: Vec<f64> = (0..6).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let analytic = power_normalize_backward(&r, &g);
        let eps = 1e-6;
        for i in 0..r.len() {
            let mut plus = r.clone();
            plus[i] += eps;
            let mut minus = r.clone();
            minus[i] -= eps;
            let f = |v: &[f64]| -> f64 {
                power_normalize(v)
                    .unwrap()
                    .iter()
                    .zip(&g)
                    .map(|(a, b)| a * b)
                    .sum()
            };
            let numeric = (f(&plus) - f(&minus)) / (2.0 * eps);
            assert!(
                (analytic[i] - numeric).abs() < 1e-6,
                "entry {i}: {} vs {numeric}",
                analytic[i]
            );
        }
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one(z in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let p = softmax(&z).unwrap();
            let sum: f64 = p.as_slice().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn softmax_shift_invariance(
            z in proptest::collection::vec(-30.0f64..30.0, 2..20),
            c in -100.0f64..100.0,
        ) {
            let p = softmax(&z).unwrap();
            let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
            let q = softmax(&shifted).unwrap();
            for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
