//! Autoencoder transceivers: architecture construction, end-to-end
//! training through the channel, and transmit/decode inference.
//!
//! An (n, k) system sends one of M = 2^k messages over n channel uses, so
//! the rate is R = k/n bits per channel use. The SISO layout is
//!
//! ```text
//! one-hot M -> dense+ReLU 2M -> dense 2n -> normalize 2n
//!           -> channel multiply -> noise [-> concat CSI]
//!           -> dense+ReLU 2M -> dense M -> softmax
//! ```
//!
//! The 2x2 MIMO variant doubles the signal and hidden widths (4n / 4M),
//! takes two concatenated one-hot messages (one per transmit antenna), and
//! decodes with two independent softmax heads of width M.

mod checkpoint;
mod train;

pub use checkpoint::{load_model, save_model};
pub use train::{train_mimo, train_siso};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, ChannelRealization, ComplexSignal, FadingMode};
use crate::nn::{
    Activation, Architecture, LayerSpec, Message, Network, ProbabilityVector,
};
use crate::rng::{stream_rng, STREAM_INIT};
use crate::{Error, Result};

/// Dimensions of a communication system: k bits over n channel uses per
/// stream, with m_t transmit and m_r receive antennas.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    pub k: usize,
    pub m_t: usize,
    pub m_r: usize,
}

impl SystemConfig {
    pub fn siso(n: usize, k: usize) -> Result<Self> {
        let cfg = SystemConfig {
            n,
            k,
            m_t: 1,
            m_r: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn mimo2x2(n: usize, k: usize) -> Result<Self> {
        let cfg = SystemConfig {
            n,
            k,
            m_t: 2,
            m_r: 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > 20 || self.m_t == 0 || self.m_r == 0 {
            return Err(Error::contract(format!(
                "invalid system config (n={}, k={}, m_t={}, m_r={})",
                self.n, self.k, self.m_t, self.m_r
            )));
        }
        Ok(())
    }

    /// M = 2^k.
    pub fn messages(&self) -> usize {
        1 << self.k
    }

    /// R = k/n in bits per channel use (per stream).
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn is_mimo(&self) -> bool {
        self.m_t > 1 || self.m_r > 1
    }

    /// Information bits conveyed per transmitted word.
    pub fn bits_per_word(&self) -> usize {
        self.k * self.m_t.max(1)
    }
}

/// Receiver-side channel knowledge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiMode {
    /// The sampled taps are concatenated onto the receiver input.
    Genie,
    /// The receiver sees only the noisy signal.
    None,
}

impl CsiMode {
    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Genie => "genie",
            CsiMode::None => "none",
        }
    }
}

impl std::str::FromStr for CsiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "genie" => Ok(CsiMode::Genie),
            "none" => Ok(CsiMode::None),
            other => Err(Error::Config(format!("unknown CSI mode `{other}`"))),
        }
    }
}

/// Mini-batch SGD settings for one training run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Messages per mini-batch.
    pub batch: usize,
    /// Learning rate η.
    pub eta: f64,
    /// Training Eb/N0 in dB.
    pub ebn0_db: f64,
    /// SGD iterations (one mini-batch each).
    pub iterations: usize,
    pub seed: u64,
    pub csi: CsiMode,
    pub fading: FadingMode,
    pub channel: ChannelModel,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch: 256,
            eta: 0.01,
            ebn0_db: 6.0,
            iterations: 10_000,
            seed: 0,
            csi: CsiMode::Genie,
            fading: FadingMode::Block,
            channel: ChannelModel::Rayleigh,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.iterations == 0 {
            return Err(Error::contract("batch and iterations must be >= 1"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::contract(format!("eta must be > 0, got {}", self.eta)));
        }
        if self.csi == CsiMode::Genie && self.fading == FadingMode::PerUse {
            return Err(Error::Config(
                "per-use fading has no fixed-width CSI; use csi=none or block fading".into(),
            ));
        }
        Ok(())
    }
}

/// [`TrainConfig`] plus the γ weight of the two-head MIMO loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MimoTrainConfig {
    pub base: TrainConfig,
    /// Weight of head 1 in L̃ = γ L1 + (1-γ) L2.
    pub gamma: f64,
}

impl Default for MimoTrainConfig {
    fn default() -> Self {
        MimoTrainConfig {
            base: TrainConfig {
                ebn0_db: 10.0,
                ..TrainConfig::default()
            },
            gamma: 0.5,
        }
    }
}

impl MimoTrainConfig {
    fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::contract(format!("gamma {} outside [0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// What a model transmits: one message (SISO) or an independent message per
/// transmit antenna (MIMO).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Word {
    Single(Message),
    Pair(Message, Message),
}

/// Training bookkeeping carried by a model.
#[derive(Clone, Debug, Default)]
pub struct TrainMeta {
    pub trained: bool,
    pub final_loss: f64,
    /// Mini-batch loss per iteration; kept in memory only.
    pub loss_trajectory: Vec<f64>,
    /// Samples whose true-class probability hit the cross-entropy floor.
    pub saturated_samples: u64,
}

/// A built (and possibly trained) autoencoder transceiver.
#[derive(Clone, Debug)]
pub struct TrainedModel {
    system: SystemConfig,
    train: TrainConfig,
    gamma: Option<f64>,
    network: Network,
    meta: TrainMeta,
}

/// Decode output: the argmax word plus the per-head probability vectors.
#[derive(Clone, Debug)]
pub struct Decoded {
    pub word: Word,
    pub heads: Vec<ProbabilityVector>,
}

/// Length-M indicator vector with a single 1 at index s.
pub fn one_hot(s: Message, m: usize) -> Result<Vec<f64>> {
    if s >= m {
        return Err(Error::contract(format!("message {s} out of range for M={m}")));
    }
    let mut v = vec![0.0; m];
    v[s] = 1.0;
    Ok(v)
}

/// Big-endian k-bit expansion of a message index.
pub fn message_to_bits(s: Message, k: usize) -> Result<Vec<u8>> {
    if s >= (1usize << k) {
        return Err(Error::contract(format!("message {s} does not fit in {k} bits")));
    }
    Ok((0..k).map(|i| ((s >> (k - 1 - i)) & 1) as u8).collect())
}

/// Inverse of [`message_to_bits`].
pub fn bits_to_message(bits: &[u8]) -> Result<Message> {
    if bits.len() > usize::BITS as usize - 1 {
        return Err(Error::contract("bit vector too long"));
    }
    let mut s = 0usize;
    for &b in bits {
        if b > 1 {
            return Err(Error::contract(format!("bit value {b} is not 0/1")));
        }
        s = (s << 1) | b as usize;
    }
    Ok(s)
}

/// SISO layer layout for a system and CSI mode.
fn siso_architecture(system: &SystemConfig, csi: CsiMode) -> Architecture {
    let m = system.messages();
    let sig = 2 * system.n;
    let mut layers = vec![
        LayerSpec::Dense {
            in_width: m,
            out_width: 2 * m,
            activation: Activation::Relu,
        },
        LayerSpec::Dense {
            in_width: 2 * m,
            out_width: sig,
            activation: Activation::Linear,
        },
        LayerSpec::Normalize { width: sig },
        LayerSpec::ChannelMultiply {
            tx: 1,
            rx: 1,
            samples_per_stream: system.n,
        },
        LayerSpec::Awgn { width: sig },
    ];
    let rx_in = match csi {
        CsiMode::Genie => {
            layers.push(LayerSpec::ConcatCsi {
                width: sig,
                csi_width: 2,
            });
            sig + 2
        }
        CsiMode::None => sig,
    };
    layers.extend([
        LayerSpec::Dense {
            in_width: rx_in,
            out_width: 2 * m,
            activation: Activation::Relu,
        },
        LayerSpec::Dense {
            in_width: 2 * m,
            out_width: m,
            activation: Activation::Linear,
        },
        LayerSpec::SoftmaxHeads { width: m, heads: 1 },
    ]);
    Architecture::new(m, layers).expect("siso layout is consistent by construction")
}

/// 2x2 MIMO layout: 2n -> 4n and 2M -> 4M relative to SISO, two input
/// messages and two softmax heads.
fn mimo_architecture(system: &SystemConfig, csi: CsiMode) -> Architecture {
    let m = system.messages();
    let sig = 4 * system.n;
    let csi_reals = 2 * system.m_r * system.m_t;
    let mut layers = vec![
        LayerSpec::Dense {
            in_width: 2 * m,
            out_width: 4 * m,
            activation: Activation::Relu,
        },
        LayerSpec::Dense {
            in_width: 4 * m,
            out_width: sig,
            activation: Activation::Linear,
        },
        LayerSpec::Normalize { width: sig },
        LayerSpec::ChannelMultiply {
            tx: system.m_t,
            rx: system.m_r,
            samples_per_stream: system.n,
        },
        LayerSpec::Awgn { width: sig },
    ];
    let rx_in = match csi {
        CsiMode::Genie => {
            layers.push(LayerSpec::ConcatCsi {
                width: sig,
                csi_width: csi_reals,
            });
            sig + csi_reals
        }
        CsiMode::None => sig,
    };
    layers.extend([
        LayerSpec::Dense {
            in_width: rx_in,
            out_width: 4 * m,
            activation: Activation::Relu,
        },
        LayerSpec::Dense {
            in_width: 4 * m,
            out_width: 2 * m,
            activation: Activation::Linear,
        },
        LayerSpec::SoftmaxHeads {
            width: 2 * m,
            heads: 2,
        },
    ]);
    Architecture::new(2 * m, layers).expect("mimo layout is consistent by construction")
}

/// Builds an initialized (untrained) SISO autoencoder.
pub fn build_siso_autoencoder(system: SystemConfig, train: &TrainConfig) -> Result<TrainedModel> {
    system.validate()?;
    train.validate()?;
    if system.is_mimo() {
        return Err(Error::contract("SISO builder requires m_t = m_r = 1"));
    }
    let arch = siso_architecture(&system, train.csi);
    let mut rng = stream_rng(train.seed, STREAM_INIT, 0);
    let network = Network::init(arch, &mut rng);
    Ok(TrainedModel {
        system,
        train: *train,
        gamma: None,
        network,
        meta: TrainMeta::default(),
    })
}

/// Builds an initialized (untrained) 2x2 MIMO autoencoder.
pub fn build_mimo_autoencoder(
    system: SystemConfig,
    train: &MimoTrainConfig,
) -> Result<TrainedModel> {
    system.validate()?;
    train.validate()?;
    if system.m_t != 2 || system.m_r != 2 {
        return Err(Error::contract("MIMO builder requires m_t = m_r = 2"));
    }
    let arch = mimo_architecture(&system, train.base.csi);
    let mut rng = stream_rng(train.base.seed, STREAM_INIT, 0);
    let network = Network::init(arch, &mut rng);
    Ok(TrainedModel {
        system,
        train: train.base,
        gamma: Some(train.gamma),
        network,
        meta: TrainMeta::default(),
    })
}

impl TrainedModel {
    pub fn system(&self) -> &SystemConfig {
        &self.system
    }

    pub fn train_config(&self) -> &TrainConfig {
        &self.train
    }

    /// γ of the two-head loss; `None` for SISO models.
    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn meta(&self) -> &TrainMeta {
        &self.meta
    }

    pub fn is_mimo(&self) -> bool {
        self.gamma.is_some()
    }

    pub fn csi_mode(&self) -> CsiMode {
        self.train.csi
    }

    /// One-hot network input for a word.
    pub fn input_vector(&self, word: Word) -> Result<Vec<f64>> {
        let m = self.system.messages();
        match (word, self.is_mimo()) {
            (Word::Single(s), false) => one_hot(s, m),
            (Word::Pair(s1, s2), true) => {
                let mut v = one_hot(s1, m)?;
                v.extend(one_hot(s2, m)?);
                Ok(v)
            }
            (Word::Single(_), true) => Err(Error::contract("MIMO model transmits message pairs")),
            (Word::Pair(..), false) => Err(Error::contract("SISO model transmits single messages")),
        }
    }

    /// Deterministic encoder output; satisfies ||x||² = signal width by the
    /// normalization layer.
    pub fn transmit(&self, word: Word) -> Result<ComplexSignal> {
        let input = self.input_vector(word)?;
        let x = self.network.run_encoder(&input)?;
        ComplexSignal::new(x)
    }

    /// Runs the receiver on a noisy signal; `csi` must be present iff the
    /// model was built with genie CSI.
    pub fn decode(&self, y: &ComplexSignal, csi: Option<&ChannelRealization>) -> Result<Decoded> {
        match (self.train.csi, csi) {
            (CsiMode::Genie, None) => {
                return Err(Error::contract("model built with genie CSI needs a realization"))
            }
            (CsiMode::None, Some(_)) => {
                return Err(Error::contract("model built without CSI got a realization"))
            }
            _ => {}
        }
        if let Some(h) = csi {
            if h.rx() != self.system.m_r || h.tx() != self.system.m_t {
                return Err(Error::contract(format!(
                    "CSI shape {}x{} does not match system {}x{}",
                    h.rx(),
                    h.tx(),
                    self.system.m_r,
                    self.system.m_t
                )));
            }
        }
        let csi_reals = csi.map(|h| h.to_reals());
        let heads = self
            .network
            .run_receiver(y.as_slice(), csi_reals.as_deref())?;
        let word = match heads.len() {
            1 => Word::Single(heads[0].argmax()),
            2 => Word::Pair(heads[0].argmax(), heads[1].argmax()),
            n => return Err(Error::contract(format!("unsupported head count {n}"))),
        };
        Ok(Decoded { word, heads })
    }

    /// Information bits of a word in transmission order (stream 1 then
    /// stream 2 for MIMO), big-endian within each message.
    pub fn word_bits(&self, word: Word) -> Result<Vec<u8>> {
        match word {
            Word::Single(s) => message_to_bits(s, self.system.k),
            Word::Pair(s1, s2) => {
                let mut bits = message_to_bits(s1, self.system.k)?;
                bits.extend(message_to_bits(s2, self.system.k)?);
                Ok(bits)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_channel_draw, sample_noise, ChannelDraw};
    use crate::nn::PassDraws;

    fn siso_74(seed: u64) -> TrainedModel {
        let system = SystemConfig::siso(7, 4).unwrap();
        let train = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        build_siso_autoencoder(system, &train).unwrap()
    }

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(0, 4).unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        for s in 0..16 {
            let v = one_hot(s, 16).unwrap();
            assert_eq!(v.iter().sum::<f64>(), 1.0);
        }
        let v = one_hot(15, 16).unwrap();
        assert_eq!(v[15], 1.0);
        assert!(one_hot(16, 16).is_err());
    }

    #[test]
    fn message_bits_examples() {
        assert_eq!(message_to_bits(0, 4).unwrap(), vec![0, 0, 0, 0]);
        assert_eq!(message_to_bits(5, 4).unwrap(), vec![0, 1, 0, 1]);
        for s in 0..16 {
            let bits = message_to_bits(s, 4).unwrap();
            assert_eq!(bits_to_message(&bits).unwrap(), s);
        }
        assert!(message_to_bits(16, 4).is_err());
    }

    #[test]
    fn siso_74_layer_widths_match_layout() {
        let model = siso_74(1);
        let widths: Vec<(usize, usize)> = model
            .network()
            .arch()
            .layers()
            .iter()
            .map(|l| (l.in_width(), l.out_width()))
            .collect();
        assert_eq!(
            widths,
            vec![
                (16, 32), // dense + relu
                (32, 14), // dense linear
                (14, 14), // normalize
                (14, 14), // channel multiply
                (14, 14), // noise
                (14, 16), // concat genie CSI
                (16, 32), // dense + relu
                (32, 16), // dense linear
                (16, 16), // softmax
            ]
        );
    }

    #[test]
    fn siso_74_parameter_count_matches_shape_walk() {
        // Independent shape walk over the documented layout.
        let dense_shapes = [(16usize, 32usize), (32, 14), (16, 32), (32, 16)];
        let expected: usize = dense_shapes.iter().map(|(i, o)| i * o + o).sum();
        let model = siso_74(2);
        assert_eq!(model.network().params().param_count(), expected);
    }

    #[test]
    fn equal_seeds_build_identical_parameters() {
        let a = siso_74(42);
        let b = siso_74(42);
        assert_eq!(a.network().params(), b.network().params());
        let c = siso_74(43);
        assert_ne!(a.network().params(), c.network().params());
    }

    #[test]
    fn mimo_structural_shapes() {
        let system = SystemConfig::mimo2x2(1, 2).unwrap();
        let cfg = MimoTrainConfig::default();
        let model = build_mimo_autoencoder(system, &cfg).unwrap();
        let arch = model.network().arch();
        assert_eq!(arch.input_width(), 8);
        assert_eq!(arch.heads(), 2);
        assert_eq!(arch.head_width(), 4);
        // Encoder output width 4n = 4.
        let x = model.transmit(Word::Pair(1, 3)).unwrap();
        assert_eq!(x.as_slice().len(), 4);
        assert!((x.energy() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn mimo_heads_are_probability_vectors() {
        let system = SystemConfig::mimo2x2(1, 2).unwrap();
        let model = build_mimo_autoencoder(system, &MimoTrainConfig::default()).unwrap();
        let mut rng = stream_rng(3, 0, 0);
        let draw = sample_channel_draw(
            ChannelModel::Rayleigh,
            FadingMode::Block,
            2,
            2,
            1,
            &mut rng,
        );
        let input = model.input_vector(Word::Pair(0, 2)).unwrap();
        let noise = sample_noise(0.1, 4, &mut rng).unwrap();
        let pass = model
            .network()
            .forward(&input, &PassDraws { channel: &draw, noise: &noise })
            .unwrap();
        assert_eq!(pass.heads.len(), 2);
        for head in &pass.heads {
            let sum: f64 = head.as_slice().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn transmit_satisfies_power_constraint_for_all_messages() {
        let model = siso_74(7);
        for s in 0..16 {
            let x = model.transmit(Word::Single(s)).unwrap();
            assert!((x.energy() - 14.0).abs() < 1e-9, "message {s}");
        }
    }

    #[test]
    fn transmit_is_deterministic() {
        let model = siso_74(8);
        let a = model.transmit(Word::Single(9)).unwrap();
        let b = model.transmit(Word::Single(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transmit_rejects_out_of_range_and_wrong_kind() {
        let model = siso_74(9);
        assert!(model.transmit(Word::Single(16)).is_err());
        assert!(model.transmit(Word::Pair(0, 0)).is_err());
    }

    #[test]
    fn decode_enforces_csi_mode() {
        let model = siso_74(10);
        let mut rng = stream_rng(11, 0, 0);
        let draw = sample_channel_draw(
            ChannelModel::Rayleigh,
            FadingMode::Block,
            1,
            1,
            7,
            &mut rng,
        );
        let x = model.transmit(Word::Single(3)).unwrap();
        let y = crate::channel::apply_channel(draw.first(), &x).unwrap();
        // Genie model without CSI: error. With CSI: fine.
        assert!(model.decode(&y, None).is_err());
        assert!(model.decode(&y, Some(draw.first())).is_ok());

        let no_csi = build_siso_autoencoder(
            SystemConfig::siso(7, 4).unwrap(),
            &TrainConfig {
                csi: CsiMode::None,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        assert!(no_csi.decode(&y, Some(draw.first())).is_err());
        assert!(no_csi.decode(&y, None).is_ok());
    }

    #[test]
    fn untrained_output_entropy_near_log_m() {
        let model = siso_74(12);
        let draw = ChannelDraw::block(ChannelRealization::identity(1));
        let noise = vec![0.0; 14];
        let mut total = 0.0;
        for s in 0..16 {
            let input = model.input_vector(Word::Single(s)).unwrap();
            let pass = model
                .network()
                .forward(&input, &PassDraws { channel: &draw, noise: &noise })
                .unwrap();
            total += pass.heads[0].entropy();
        }
        let mean = total / 16.0;
        let target = 16f64.ln();
        assert!(
            (mean - target).abs() < 0.2 * target,
            "mean entropy {mean} vs ln M {target}"
        );
    }

    #[test]
    fn genie_csi_with_per_use_fading_is_rejected() {
        let system = SystemConfig::siso(7, 4).unwrap();
        let train = TrainConfig {
            fading: FadingMode::PerUse,
            csi: CsiMode::Genie,
            ..TrainConfig::default()
        };
        assert!(build_siso_autoencoder(system, &train).is_err());
        let ok = TrainConfig {
            fading: FadingMode::PerUse,
            csi: CsiMode::None,
            ..TrainConfig::default()
        };
        assert!(build_siso_autoencoder(system, &ok).is_ok());
    }

    #[test]
    fn mimo_loss_arithmetic_examples() {
        // L1 = 2, L2 = 4, gamma = 0.5 -> 3; endpoints select one head;
        // swapping heads and replacing gamma with 1-gamma is invariant.
        let system = SystemConfig::mimo2x2(1, 2).unwrap();
        let model = build_mimo_autoencoder(system, &MimoTrainConfig::default()).unwrap();
        let p1 = prob_with(4, 0, (-2.0f64).exp());
        let p2 = prob_with(4, 1, (-4.0f64).exp());
        let heads = vec![p1.clone(), p2.clone()];
        let loss = |heads: &[ProbabilityVector], first, second, gamma| {
            model
                .network()
                .loss(
                    heads,
                    &crate::nn::Target::Pair {
                        first,
                        second,
                        gamma,
                    },
                )
                .unwrap()
                .0
        };
        assert!((loss(&heads, 0, 1, 0.5) - 3.0).abs() < 1e-12);
        assert!((loss(&heads, 0, 1, 1.0) - 2.0).abs() < 1e-12);
        assert!((loss(&heads, 0, 1, 0.0) - 4.0).abs() < 1e-12);
        let swapped = vec![p2, p1];
        for gamma in [0.0, 0.25, 0.5, 0.8, 1.0] {
            let a = loss(&heads, 0, 1, gamma);
            let b = loss(&swapped, 1, 0, 1.0 - gamma);
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn prob_with(m: usize, s: usize, ps: f64) -> ProbabilityVector {
        let rest = (1.0 - ps) / (m - 1) as f64;
        let mut v = vec![rest; m];
        v[s] = ps;
        ProbabilityVector::new(v).unwrap()
    }
}
