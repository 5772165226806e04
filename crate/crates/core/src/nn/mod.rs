//! Minimal deterministic feed-forward kernel with exact reverse-mode
//! gradients for every layer the transceivers use.
//!
//! This is not a general autodiff system: the layer set is exactly dense
//! (ReLU / linear), softmax heads, average-power normalization, a fixed
//! complex channel multiply, and additive noise. The noise layer is
//! stochastic in the forward pass and the identity in the backward pass;
//! channel taps are constants of a pass. All math is in `f64`.

mod checkpoint;
mod gradcheck;
mod network;
mod ops;

pub use checkpoint::{read_network, write_network};
pub use gradcheck::{finite_diff_gradcheck, max_relative_error, GradCheckReport, GradCheckSample};
pub use network::{Architecture, LayerSpec, Network, PassDraws, Target};
pub use ops::{
    affine_forward, cross_entropy, power_normalize, power_normalize_backward, relu, relu_backward,
    softmax, softmax_backward, CrossEntropyLoss, PROB_FLOOR,
};

use rand::distributions::{Distribution, Uniform};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// A message index s in {0, ..., M-1}, encoding k = log2(M) bits.
pub type Message = usize;

/// Dense layer activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
}

/// Weights and bias of one dense layer. Weights are row-major with shape
/// (out_width x in_width).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayerParams {
    in_width: usize,
    out_width: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl DenseLayerParams {
    pub fn new(in_width: usize, out_width: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() != in_width * out_width || bias.len() != out_width {
            return Err(Error::contract(format!(
                "dense layer {out_width}x{in_width}: got {} weights, {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if !weights.iter().chain(bias.iter()).all(|v| v.is_finite()) {
            return Err(Error::contract("dense layer parameters must be finite"));
        }
        Ok(DenseLayerParams {
            in_width,
            out_width,
            weights,
            bias,
        })
    }

    pub fn zeros(in_width: usize, out_width: usize) -> Self {
        DenseLayerParams {
            in_width,
            out_width,
            weights: vec![0.0; in_width * out_width],
            bias: vec![0.0; out_width],
        }
    }

    /// Glorot-uniform weights on ±sqrt(6/(in+out)), zero bias.
    pub fn glorot(in_width: usize, out_width: usize, rng: &mut ChaCha8Rng) -> Self {
        let limit = (6.0 / (in_width + out_width) as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        let weights = (0..in_width * out_width).map(|_| dist.sample(rng)).collect();
        DenseLayerParams {
            in_width,
            out_width,
            weights,
            bias: vec![0.0; out_width],
        }
    }

    pub fn in_width(&self) -> usize {
        self.in_width
    }

    pub fn out_width(&self) -> usize {
        self.out_width
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Parameters in checkpoint order: weights row-major, then bias.
    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn param(&self, idx: usize) -> f64 {
        if idx < self.weights.len() {
            self.weights[idx]
        } else {
            self.bias[idx - self.weights.len()]
        }
    }

    fn param_mut(&mut self, idx: usize) -> &mut f64 {
        if idx < self.weights.len() {
            &mut self.weights[idx]
        } else {
            let i = idx - self.weights.len();
            &mut self.bias[i]
        }
    }
}

/// The full ordered set θ of dense-layer parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParameters {
    layers: Vec<DenseLayerParams>,
}

impl NetworkParameters {
    pub fn new(layers: Vec<DenseLayerParams>) -> Self {
        NetworkParameters { layers }
    }

    pub fn layers(&self) -> &[DenseLayerParams] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    /// Flat parameter view in layer order (weights then bias per layer);
    /// used by the finite-difference checker and the optimizer tests.
    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for layer in &self.layers {
            if idx < layer.param_count() {
                return layer.param(idx);
            }
            idx -= layer.param_count();
        }
        panic!("flat parameter index out of range");
    }

    pub fn set_flat(&mut self, mut idx: usize, value: f64) {
        for layer in &mut self.layers {
            if idx < layer.param_count() {
                *layer.param_mut(idx) = value;
                return;
            }
            idx -= layer.param_count();
        }
        panic!("flat parameter index out of range");
    }

    /// θ' = θ - η ∇L, elementwise.
    pub fn sgd_step(&mut self, grads: &GradientSet, eta: f64) -> Result<()> {
        if !self.same_shape(grads) {
            return Err(Error::contract("gradient shape does not match parameters"));
        }
        for (layer, grad) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, g) in layer.weights.iter_mut().zip(&grad.weights) {
                *w -= eta * g;
            }
            for (b, g) in layer.bias.iter_mut().zip(&grad.bias) {
                *b -= eta * g;
            }
        }
        Ok(())
    }

    fn same_shape(&self, grads: &GradientSet) -> bool {
        self.layers.len() == grads.layers.len()
            && self
                .layers
                .iter()
                .zip(&grads.layers)
                .all(|(a, b)| a.in_width == b.in_width && a.out_width == b.out_width)
    }
}

/// One gradient entry per parameter; shape-identical to the parameter set
/// it differentiates.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    layers: Vec<DenseLayerParams>,
}

impl GradientSet {
    pub fn zeros_like(params: &NetworkParameters) -> Self {
        GradientSet {
            layers: params
                .layers
                .iter()
                .map(|l| DenseLayerParams::zeros(l.in_width, l.out_width))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[DenseLayerParams] {
        &self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn get_flat(&self, mut idx: usize) -> f64 {
        for layer in &self.layers {
            if idx < layer.param_count() {
                return layer.param(idx);
            }
            idx -= layer.param_count();
        }
        panic!("flat gradient index out of range");
    }

    /// self += other.
    pub fn accumulate(&mut self, other: &GradientSet) {
        debug_assert_eq!(self.layers.len(), other.layers.len());
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.weights.iter_mut().zip(&src.weights) {
                *d += s;
            }
            for (d, s) in dst.bias.iter_mut().zip(&src.bias) {
                *d += s;
            }
        }
    }

    /// self *= c.
    pub fn scale(&mut self, c: f64) {
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w *= c;
            }
            for b in &mut layer.bias {
                *b *= c;
            }
        }
    }

    pub(crate) fn layer_mut(&mut self, idx: usize) -> &mut DenseLayerParams {
        &mut self.layers[idx]
    }
}

/// A probability vector over the M messages: entries in [0, 1] summing to 1
/// within 1e-9.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::contract("probability vector must be non-empty"));
        }
        if !p.iter().all(|v| v.is_finite() && (0.0..=1.0 + 1e-9).contains(v)) {
            return Err(Error::contract("probability entries must lie in [0, 1]"));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::contract(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(ProbabilityVector(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; exact ties break toward the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate().skip(1) {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.0
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn glorot_init_is_deterministic_and_bounded() {
        let mut a = stream_rng(9, 0, 0);
        let mut b = stream_rng(9, 0, 0);
        let la = DenseLayerParams::glorot(16, 32, &mut a);
        let lb = DenseLayerParams::glorot(16, 32, &mut b);
        assert_eq!(la, lb);
        let limit = (6.0 / 48.0f64).sqrt();
        assert!(la.weights().iter().all(|w| w.abs() <= limit));
        assert!(la.bias().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn sgd_step_matches_direct_arithmetic() {
        let mut params = NetworkParameters::new(vec![DenseLayerParams::new(
            1,
            2,
            vec![1.0, 2.0],
            vec![0.0, 0.0],
        )
        .unwrap()]);
        let mut grads = GradientSet::zeros_like(&params);
        grads.layers[0].weights = vec![0.5, -1.0];
        params.sgd_step(&grads, 0.1).unwrap();
        assert_eq!(params.layers()[0].weights(), &[0.95, 2.1]);
    }

    #[test]
    fn sgd_step_zero_eta_is_identity() {
        let mut params = NetworkParameters::new(vec![DenseLayerParams::new(
            2,
            1,
            vec![0.3, -0.7],
            vec![0.1],
        )
        .unwrap()]);
        let reference = params.clone();
        let mut grads = GradientSet::zeros_like(&params);
        grads.layers[0].weights = vec![5.0, 5.0];
        grads.layers[0].bias = vec![5.0];
        params.sgd_step(&grads, 0.0).unwrap();
        assert_eq!(params, reference);
    }

    #[test]
    fn two_sgd_steps_compose_additively() {
        let make = || {
            NetworkParameters::new(vec![DenseLayerParams::new(
                1,
                2,
                vec![0.4, -0.2],
                vec![1.0, -1.0],
            )
            .unwrap()])
        };
        let mut g1 = GradientSet::zeros_like(&make());
        g1.layers[0].weights = vec![1.0, 2.0];
        g1.layers[0].bias = vec![-0.5, 0.25];
        let mut g2 = GradientSet::zeros_like(&make());
        g2.layers[0].weights = vec![-3.0, 0.5];
        g2.layers[0].bias = vec![0.1, 0.2];

        let mut seq = make();
        seq.sgd_step(&g1, 0.05).unwrap();
        seq.sgd_step(&g2, 0.05).unwrap();

        let mut combined = g1.clone();
        combined.accumulate(&g2);
        let mut once = make();
        once.sgd_step(&combined, 0.05).unwrap();

        for (a, b) in seq.layers()[0]
            .weights()
            .iter()
            .zip(once.layers()[0].weights())
        {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sgd_step_rejects_shape_mismatch() {
        let mut params = NetworkParameters::new(vec![DenseLayerParams::zeros(2, 2)]);
        let grads = GradientSet::zeros_like(&NetworkParameters::new(vec![
            DenseLayerParams::zeros(2, 3),
        ]));
        assert!(params.sgd_step(&grads, 0.1).is_err());
    }

    #[test]
    fn argmax_ties_break_low() {
        let p = ProbabilityVector::new(vec![0.25, 0.25, 0.25, 0.25]).unwrap();
        assert_eq!(p.argmax(), 0);
        let q = ProbabilityVector::new(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(q.argmax(), 1);
    }

    #[test]
    fn probability_vector_rejects_bad_sums() {
        assert!(ProbabilityVector::new(vec![0.5, 0.4]).is_err());
        assert!(ProbabilityVector::new(vec![]).is_err());
        assert!(ProbabilityVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn flat_param_roundtrip() {
        let mut rng = stream_rng(10, 0, 0);
        let params = NetworkParameters::new(vec![
            DenseLayerParams::glorot(3, 4, &mut rng),
            DenseLayerParams::glorot(4, 2, &mut rng),
        ]);
        let mut copy = params.clone();
        assert_eq!(params.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
        for i in 0..params.param_count() {
            let v = params.get_flat(i);
            copy.set_flat(i, v + 1.0);
            assert_eq!(copy.get_flat(i), v + 1.0);
            copy.set_flat(i, v);
        }
        assert_eq!(copy, params);
    }
}
