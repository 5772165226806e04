//! Layer pipeline, forward pass with trace recording, and exact backward.

use super::ops::{
    affine_forward_unchecked, cross_entropy, power_normalize, power_normalize_backward, relu,
    relu_backward, softmax, softmax_backward, PROB_FLOOR,
};
use super::{Activation, GradientSet, Message, NetworkParameters, ProbabilityVector};
use crate::channel::{apply_draw, apply_draw_transpose, ChannelDraw};
use crate::{Error, Result};

/// One layer of the transceiver pipeline.
///
/// Dense layers carry trainable parameters; the rest are fixed maps. The
/// channel-multiply and noise layers consume the pass draws: taps are held
/// constant in the backward pass and the noise layer backpropagates as the
/// identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LayerSpec {
    Dense {
        in_width: usize,
        out_width: usize,
        activation: Activation,
    },
    /// Scales to squared norm == width (unit average power per dimension).
    Normalize { width: usize },
    /// Complex multiply by the sampled taps; `tx`/`rx` antenna streams of
    /// `samples_per_stream` complex samples each.
    ChannelMultiply {
        tx: usize,
        rx: usize,
        samples_per_stream: usize,
    },
    /// Adds the pre-sampled noise vector; identity in the backward pass.
    Awgn { width: usize },
    /// Appends the receiver-side channel knowledge to the signal.
    ConcatCsi { width: usize, csi_width: usize },
    /// Splits the logit vector into `heads` blocks and applies softmax to
    /// each; must be the final layer.
    SoftmaxHeads { width: usize, heads: usize },
}

impl LayerSpec {
    pub fn in_width(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_width, .. } => in_width,
            LayerSpec::Normalize { width } => width,
            LayerSpec::ChannelMultiply {
                tx,
                samples_per_stream,
                ..
            } => 2 * tx * samples_per_stream,
            LayerSpec::Awgn { width } => width,
            LayerSpec::ConcatCsi { width, .. } => width,
            LayerSpec::SoftmaxHeads { width, .. } => width,
        }
    }

    pub fn out_width(&self) -> usize {
        match *self {
            LayerSpec::Dense { out_width, .. } => out_width,
            LayerSpec::Normalize { width } => width,
            LayerSpec::ChannelMultiply {
                rx,
                samples_per_stream,
                ..
            } => 2 * rx * samples_per_stream,
            LayerSpec::Awgn { width } => width,
            LayerSpec::ConcatCsi { width, csi_width } => width + csi_width,
            LayerSpec::SoftmaxHeads { width, .. } => width,
        }
    }
}

/// Ordered layer layout of a transceiver network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    input_width: usize,
    layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn new(input_width: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let arch = Architecture {
            input_width,
            layers,
        };
        arch.validate()?;
        Ok(arch)
    }

    fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::contract("architecture needs at least one layer"));
        }
        let mut width = self.input_width;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.in_width() != width {
                return Err(Error::contract(format!(
                    "layer {i} expects input width {}, previous layer produces {width}",
                    layer.in_width()
                )));
            }
            width = layer.out_width();
            if let LayerSpec::SoftmaxHeads { width, heads } = *layer {
                if heads == 0 || width % heads != 0 {
                    return Err(Error::contract(format!(
                        "softmax width {width} not divisible into {heads} heads"
                    )));
                }
                if i != self.layers.len() - 1 {
                    return Err(Error::contract("softmax heads must be the final layer"));
                }
            }
            if let LayerSpec::ChannelMultiply { .. } = layer {
                match self.layers.get(i + 1) {
                    Some(LayerSpec::Awgn { .. }) => {}
                    _ => {
                        return Err(Error::contract(
                            "channel multiply must be immediately followed by noise",
                        ))
                    }
                }
            }
        }
        let normalize_count = self
            .layers
            .iter()
            .filter(|l| matches!(l, LayerSpec::Normalize { .. }))
            .count();
        if normalize_count != 1 {
            return Err(Error::contract(format!(
                "architecture must contain exactly one normalization layer, found {normalize_count}"
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map(LayerSpec::out_width).unwrap_or(0)
    }

    /// Shapes of the dense layers in pipeline order as (in, out, activation).
    pub fn dense_shapes(&self) -> Vec<(usize, usize, Activation)> {
        self.layers
            .iter()
            .filter_map(|l| match *l {
                LayerSpec::Dense {
                    in_width,
                    out_width,
                    activation,
                } => Some((in_width, out_width, activation)),
                _ => None,
            })
            .collect()
    }

    /// Index of the channel-multiply layer, if any.
    pub fn channel_layer(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| matches!(l, LayerSpec::ChannelMultiply { .. }))
    }

    /// Index of the noise layer, if any.
    pub fn awgn_layer(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Awgn { .. }))
    }

    /// Width the noise vector must have (0 when there is no noise layer).
    pub fn noise_width(&self) -> usize {
        self.awgn_layer()
            .map(|i| self.layers[i].out_width())
            .unwrap_or(0)
    }

    /// Number of softmax heads in the output layer.
    pub fn heads(&self) -> usize {
        match self.layers.last() {
            Some(&LayerSpec::SoftmaxHeads { heads, .. }) => heads,
            _ => 1,
        }
    }

    /// Width of one softmax head.
    pub fn head_width(&self) -> usize {
        self.output_width() / self.heads()
    }
}

/// The sampled randomness consumed by one forward pass.
///
/// Sampling happens at the call site, so forward and backward are
/// deterministic functions of `(θ, input, draws)` and the draws can be
/// frozen for gradient verification.
#[derive(Clone, Debug)]
pub struct PassDraws<'a> {
    pub channel: &'a ChannelDraw,
    pub noise: &'a [f64],
}

/// Per-layer activations of one forward pass plus the draws it consumed.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    input: Vec<f64>,
    activations: Vec<Vec<f64>>,
    channel: ChannelDraw,
    noise: Vec<f64>,
}

impl ForwardTrace {
    pub fn layer_count(&self) -> usize {
        self.activations.len()
    }

    pub fn activation(&self, layer: usize) -> &[f64] {
        &self.activations[layer]
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty architecture")
    }

    pub fn channel(&self) -> &ChannelDraw {
        &self.channel
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    fn input_to_layer(&self, layer: usize) -> &[f64] {
        if layer == 0 {
            &self.input
        } else {
            &self.activations[layer - 1]
        }
    }
}

/// Result of a full forward pass: one probability vector per head plus the
/// recorded trace.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub heads: Vec<ProbabilityVector>,
    pub trace: ForwardTrace,
}

/// Training target for one pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Target {
    /// Single-head cross entropy on message s.
    Single(Message),
    /// Two-head weighted loss γ·L1 + (1-γ)·L2.
    Pair {
        first: Message,
        second: Message,
        gamma: f64,
    },
}

/// An architecture bound to a concrete parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    arch: Architecture,
    params: NetworkParameters,
}

impl Network {
    pub fn new(arch: Architecture, params: NetworkParameters) -> Result<Self> {
        let shapes = arch.dense_shapes();
        if shapes.len() != params.layers().len() {
            return Err(Error::contract(format!(
                "architecture has {} dense layers, parameters have {}",
                shapes.len(),
                params.layers().len()
            )));
        }
        for (i, ((in_w, out_w, _), layer)) in shapes.iter().zip(params.layers()).enumerate() {
            if layer.in_width() != *in_w || layer.out_width() != *out_w {
                return Err(Error::contract(format!(
                    "dense layer {i} shape {}x{} does not match architecture {out_w}x{in_w}",
                    layer.out_width(),
                    layer.in_width()
                )));
            }
        }
        Ok(Network { arch, params })
    }

    /// Glorot-uniform weights and zero biases, deterministic in the rng.
    pub fn init(arch: Architecture, rng: &mut rand_chacha::ChaCha8Rng) -> Self {
        let layers = arch
            .dense_shapes()
            .iter()
            .map(|&(in_w, out_w, _)| super::DenseLayerParams::glorot(in_w, out_w, rng))
            .collect();
        Network {
            arch,
            params: NetworkParameters::new(layers),
        }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn params(&self) -> &NetworkParameters {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut NetworkParameters {
        &mut self.params
    }

    pub fn into_parts(self) -> (Architecture, NetworkParameters) {
        (self.arch, self.params)
    }

    /// Full forward pass through every layer, recording the trace.
    pub fn forward(&self, input: &[f64], draws: &PassDraws) -> Result<ForwardPass> {
        if input.len() != self.arch.input_width() {
            return Err(Error::contract(format!(
                "input width {} != architecture input width {}",
                input.len(),
                self.arch.input_width()
            )));
        }
        if draws.noise.len() != self.arch.noise_width() {
            return Err(Error::contract(format!(
                "noise vector width {} != noise layer width {}",
                draws.noise.len(),
                self.arch.noise_width()
            )));
        }
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(self.arch.layers().len());
        let mut dense_idx = 0;
        let mut x: Vec<f64> = input.to_vec();
        for layer in self.arch.layers() {
            x = self.layer_forward(layer, &x, draws, &mut dense_idx)?;
            activations.push(x.clone());
        }
        let trace = ForwardTrace {
            input: input.to_vec(),
            activations,
            channel: draws.channel.clone(),
            noise: draws.noise.to_vec(),
        };
        let heads = split_heads(trace.output(), self.arch.heads())?;
        Ok(ForwardPass { heads, trace })
    }

    fn layer_forward(
        &self,
        layer: &LayerSpec,
        x: &[f64],
        draws: &PassDraws,
        dense_idx: &mut usize,
    ) -> Result<Vec<f64>> {
        Ok(match *layer {
            LayerSpec::Dense { activation, .. } => {
                let z = affine_forward_unchecked(&self.params.layers()[*dense_idx], x);
                *dense_idx += 1;
                match activation {
                    Activation::Relu => relu(&z),
                    Activation::Linear => z,
                }
            }
            LayerSpec::Normalize { .. } => power_normalize(x)?,
            LayerSpec::ChannelMultiply { tx, rx, .. } => apply_draw(draws.channel, x, tx, rx),
            LayerSpec::Awgn { .. } => x.iter().zip(draws.noise).map(|(a, n)| a + n).collect(),
            LayerSpec::ConcatCsi { csi_width, .. } => {
                let csi = draws.channel.first().to_reals();
                if csi.len() != csi_width {
                    return Err(Error::contract(format!(
                        "channel draw provides {} CSI reals, layer expects {csi_width}",
                        csi.len()
                    )));
                }
                let mut out = x.to_vec();
                out.extend_from_slice(&csi);
                out
            }
            LayerSpec::SoftmaxHeads { width, heads } => {
                let head_w = width / heads;
                let mut out = Vec::with_capacity(width);
                for h in 0..heads {
                    let p = softmax(&x[h * head_w..(h + 1) * head_w])?;
                    out.extend_from_slice(p.as_slice());
                }
                out
            }
        })
    }

    /// Per-sample loss of an already-computed output against a target.
    ///
    /// Returns the loss and whether any head's probability was clamped.
    pub fn loss(&self, heads: &[ProbabilityVector], target: &Target) -> Result<(f64, bool)> {
        match *target {
            Target::Single(s) => {
                expect_heads(heads, 1)?;
                let ce = cross_entropy(&heads[0], s)?;
                Ok((ce.loss, ce.saturated))
            }
            Target::Pair {
                first,
                second,
                gamma,
            } => {
                expect_heads(heads, 2)?;
                if !(0.0..=1.0).contains(&gamma) {
                    return Err(Error::contract(format!("gamma {gamma} outside [0, 1]")));
                }
                let l1 = cross_entropy(&heads[0], first)?;
                let l2 = cross_entropy(&heads[1], second)?;
                Ok((
                    gamma * l1.loss + (1.0 - gamma) * l2.loss,
                    l1.saturated || l2.saturated,
                ))
            }
        }
    }

    /// Exact gradient of the per-sample loss with respect to every
    /// parameter, treating the trace's channel taps and noise as constants.
    pub fn backward(&self, trace: &ForwardTrace, target: &Target) -> Result<GradientSet> {
        self.check_trace(trace)?;
        let layers = self.arch.layers();
        let mut grads = GradientSet::zeros_like(&self.params);
        let mut dense_indices: Vec<usize> = Vec::new();
        {
            let mut next = 0;
            for layer in layers {
                if matches!(layer, LayerSpec::Dense { .. }) {
                    dense_indices.push(next);
                    next += 1;
                } else {
                    dense_indices.push(usize::MAX);
                }
            }
        }

        let mut g: Vec<f64> = Vec::new();
        for (l, layer) in layers.iter().enumerate().rev() {
            let input = trace.input_to_layer(l);
            let output = trace.activation(l);
            match *layer {
                LayerSpec::SoftmaxHeads { width, heads } => {
                    debug_assert_eq!(l, layers.len() - 1);
                    g = softmax_ce_logit_grad(output, width / heads, heads, target)?;
                }
                LayerSpec::Dense { activation, .. } => {
                    let dz = match activation {
                        Activation::Relu => relu_backward(output, &g),
                        Activation::Linear => g.clone(),
                    };
                    let idx = dense_indices[l];
                    let layer_params = &self.params.layers()[idx];
                    let in_w = layer_params.in_width();
                    let grad_layer = grads.layer_mut(idx);
                    for (o, &dzo) in dz.iter().enumerate() {
                        grad_layer.bias[o] += dzo;
                        let row = &mut grad_layer.weights[o * in_w..(o + 1) * in_w];
                        for (w, &xi) in row.iter_mut().zip(input) {
                            *w += dzo * xi;
                        }
                    }
                    // g_in = Wᵀ dz
                    let w = layer_params.weights();
                    let mut g_in = vec![0.0; in_w];
                    for (o, &dzo) in dz.iter().enumerate() {
                        let row = &w[o * in_w..(o + 1) * in_w];
                        for (gi, &wi) in g_in.iter_mut().zip(row) {
                            *gi += wi * dzo;
                        }
                    }
                    g = g_in;
                }
                LayerSpec::Normalize { .. } => {
                    g = power_normalize_backward(input, &g);
                }
                LayerSpec::ChannelMultiply { tx, rx, .. } => {
                    g = apply_draw_transpose(&trace.channel, &g, tx, rx);
                }
                LayerSpec::Awgn { .. } => {
                    // Identity: the noise layer is forward-only.
                }
                LayerSpec::ConcatCsi { width, .. } => {
                    g.truncate(width);
                }
            }
        }
        Ok(grads)
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<()> {
        let layers = self.arch.layers();
        if trace.activations.len() != layers.len() {
            return Err(Error::contract(format!(
                "trace has {} activations for {} layers",
                trace.activations.len(),
                layers.len()
            )));
        }
        if trace.input.len() != self.arch.input_width() {
            return Err(Error::contract("trace input width mismatch"));
        }
        for (i, (layer, act)) in layers.iter().zip(&trace.activations).enumerate() {
            if act.len() != layer.out_width() {
                return Err(Error::contract(format!(
                    "trace activation {i} has width {}, layer produces {}",
                    act.len(),
                    layer.out_width()
                )));
            }
        }
        if trace.noise.len() != self.arch.noise_width() {
            return Err(Error::contract("trace noise width mismatch"));
        }
        Ok(())
    }

    /// Runs only the layers before the channel multiply (the transmitter).
    pub fn run_encoder(&self, input: &[f64]) -> Result<Vec<f64>> {
        let stop = self
            .arch
            .channel_layer()
            .ok_or_else(|| Error::contract("architecture has no channel layer"))?;
        if input.len() != self.arch.input_width() {
            return Err(Error::contract(format!(
                "input width {} != architecture input width {}",
                input.len(),
                self.arch.input_width()
            )));
        }
        let draw = ChannelDraw::block(crate::channel::ChannelRealization::identity(1));
        let draws = PassDraws {
            channel: &draw,
            noise: &[],
        };
        let mut dense_idx = 0;
        let mut x = input.to_vec();
        for layer in &self.arch.layers()[..stop] {
            debug_assert!(!matches!(
                layer,
                LayerSpec::ChannelMultiply { .. } | LayerSpec::Awgn { .. }
            ));
            x = self.layer_forward(layer, &x, &draws, &mut dense_idx)?;
        }
        Ok(x)
    }

    /// Runs only the layers after the noise layer (the receiver), from a
    /// received signal and optional CSI reals.
    pub fn run_receiver(&self, y: &[f64], csi: Option<&[f64]>) -> Result<Vec<ProbabilityVector>> {
        let awgn = self
            .arch
            .awgn_layer()
            .ok_or_else(|| Error::contract("architecture has no noise layer"))?;
        let rx_layers = &self.arch.layers()[awgn + 1..];
        let expects_csi = rx_layers
            .iter()
            .any(|l| matches!(l, LayerSpec::ConcatCsi { .. }));
        if expects_csi != csi.is_some() {
            return Err(Error::contract(if expects_csi {
                "receiver was built with CSI input but none was provided"
            } else {
                "receiver was built without CSI input but CSI was provided"
            }));
        }
        if y.len() != self.arch.layers()[awgn].out_width() {
            return Err(Error::contract(format!(
                "received signal width {} != expected {}",
                y.len(),
                self.arch.layers()[awgn].out_width()
            )));
        }
        let mut dense_idx = self.arch.layers()[..=awgn]
            .iter()
            .filter(|l| matches!(l, LayerSpec::Dense { .. }))
            .count();
        let mut x = y.to_vec();
        for layer in rx_layers {
            x = match *layer {
                LayerSpec::ConcatCsi { csi_width, .. } => {
                    let csi = csi.expect("checked above");
                    if csi.len() != csi_width {
                        return Err(Error::contract(format!(
                            "CSI width {} != expected {csi_width}",
                            csi.len()
                        )));
                    }
                    let mut out = x.clone();
                    out.extend_from_slice(csi);
                    out
                }
                _ => {
                    let draw = ChannelDraw::block(crate::channel::ChannelRealization::identity(1));
                    let draws = PassDraws {
                        channel: &draw,
                        noise: &[],
                    };
                    self.layer_forward(layer, &x, &draws, &mut dense_idx)?
                }
            };
        }
        split_heads(&x, self.arch.heads())
    }

    /// ReLU activation pattern of a trace; used to detect finite-difference
    /// evaluations that straddle a kink.
    pub(super) fn relu_signature(&self, trace: &ForwardTrace) -> Vec<bool> {
        let mut sig = Vec::new();
        for (layer, act) in self.arch.layers().iter().zip(&trace.activations) {
            if matches!(
                layer,
                LayerSpec::Dense {
                    activation: Activation::Relu,
                    ..
                }
            ) {
                sig.extend(act.iter().map(|&v| v > 0.0));
            }
        }
        sig
    }
}

fn expect_heads(heads: &[ProbabilityVector], want: usize) -> Result<()> {
    if heads.len() != want {
        return Err(Error::contract(format!(
            "target expects {want} head(s), network produced {}",
            heads.len()
        )));
    }
    Ok(())
}

fn split_heads(output: &[f64], heads: usize) -> Result<Vec<ProbabilityVector>> {
    let head_w = output.len() / heads;
    (0..heads)
        .map(|h| ProbabilityVector::new(output[h * head_w..(h + 1) * head_w].to_vec()))
        .collect()
}

/// Gradient of the (clamped) cross-entropy loss with respect to the logits
/// feeding the softmax heads: `weight * (p - onehot)` per head, zero for a
/// head whose true-class probability sat below the clamp floor.
fn softmax_ce_logit_grad(
    probs: &[f64],
    head_w: usize,
    heads: usize,
    target: &Target,
) -> Result<Vec<f64>> {
    let targets: Vec<(Message, f64)> = match *target {
        Target::Single(s) => {
            if heads != 1 {
                return Err(Error::contract("single-message target on multi-head network"));
            }
            vec![(s, 1.0)]
        }
        Target::Pair {
            first,
            second,
            gamma,
        } => {
            if heads != 2 {
                return Err(Error::contract("pair target on single-head network"));
            }
            if !(0.0..=1.0).contains(&gamma) {
                return Err(Error::contract(format!("gamma {gamma} outside [0, 1]")));
            }
            vec![(first, gamma), (second, 1.0 - gamma)]
        }
    };
    let mut g = vec![0.0; probs.len()];
    for (h, &(s, weight)) in targets.iter().enumerate() {
        if s >= head_w {
            return Err(Error::contract(format!(
                "message {s} out of range for head width {head_w}"
            )));
        }
        let p = &probs[h * head_w..(h + 1) * head_w];
        if p[s] < PROB_FLOOR {
            // Loss is clamped to a constant here; gradient vanishes.
            continue;
        }
        let out = &mut g[h * head_w..(h + 1) * head_w];
        for (gi, &pi) in out.iter_mut().zip(p) {
            *gi = weight * pi;
        }
        out[s] -= weight;
    }
    Ok(g)
}
