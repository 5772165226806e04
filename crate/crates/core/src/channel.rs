//! Complex-baseband signals, Rayleigh fading, AWGN, and SNR arithmetic.
//!
//! Complex values are stored as interleaved `(re, im)` pairs in flat `f64`
//! buffers, so a length-`2n` real vector holds `n` complex samples. All
//! layer widths elsewhere in the crate count real dimensions.
//!
//! The Eb/N0 convention is fixed once for every system, learned and
//! conventional alike: the transmitter is normalized to unit average power
//! per real dimension, and the per-real-dimension noise variance is
//! `beta = 1 / (2 * R * 10^(EbN0_dB / 10))` with `R = k/n` in bits per
//! channel use. Under this rule uncoded BPSK at amplitude ±1 reproduces the
//! textbook `Q(sqrt(2*EbN0))` curve exactly, which anchors the theory-based
//! acceptance checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Multiply two complex numbers stored as `(re, im)`.
#[inline]
pub fn cx_mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// Complex conjugate.
#[inline]
pub fn cx_conj(z: (f64, f64)) -> (f64, f64) {
    (z.0, -z.1)
}

/// Squared magnitude |z|^2.
#[inline]
pub fn cx_mag_sq(z: (f64, f64)) -> f64 {
    z.0 * z.0 + z.1 * z.1
}

/// Channel selection for a link or a training run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelModel {
    /// Taps pinned to 1 (identity); only the AWGN layer is active.
    AwgnOnly,
    /// Unit-mean-square i.i.d. Rayleigh fading taps.
    Rayleigh,
}

impl ChannelModel {
    pub fn name(self) -> &'static str {
        match self {
            ChannelModel::AwgnOnly => "awgn-only",
            ChannelModel::Rayleigh => "rayleigh",
        }
    }
}

impl std::str::FromStr for ChannelModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn-only" | "awgn" => Ok(ChannelModel::AwgnOnly),
            "rayleigh" => Ok(ChannelModel::Rayleigh),
            other => Err(Error::Config(format!("unknown channel model `{other}`"))),
        }
    }
}

/// Fading granularity: one realization per message, or per channel use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FadingMode {
    /// One channel realization held constant over the n channel uses of a
    /// message, redrawn independently per message (default).
    Block,
    /// Independent realization for every complex sample.
    PerUse,
}

impl FadingMode {
    pub fn name(self) -> &'static str {
        match self {
            FadingMode::Block => "block",
            FadingMode::PerUse => "per-use",
        }
    }
}

impl std::str::FromStr for FadingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(FadingMode::Block),
            "per-use" | "peruse" => Ok(FadingMode::PerUse),
            other => Err(Error::Config(format!("unknown fading mode `{other}`"))),
        }
    }
}

/// A complex baseband signal: n complex samples as 2n interleaved reals.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<f64>,
}

impl ComplexSignal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() % 2 != 0 {
            return Err(Error::contract(format!(
                "complex signal needs an even number of reals, got {}",
                samples.len()
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::contract("complex signal has non-finite entries"));
        }
        Ok(ComplexSignal { samples })
    }

    /// Builds from complex samples given as `(re, im)` pairs.
    pub fn from_complex(samples: &[(f64, f64)]) -> Self {
        let mut v = Vec::with_capacity(samples.len() * 2);
        for &(re, im) in samples {
            v.push(re);
            v.push(im);
        }
        ComplexSignal { samples: v }
    }

    /// Number of complex samples.
    pub fn len_complex(&self) -> usize {
        self.samples.len() / 2
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.samples
    }

    /// The t-th complex sample as `(re, im)`.
    pub fn sample(&self, t: usize) -> (f64, f64) {
        (self.samples[2 * t], self.samples[2 * t + 1])
    }

    /// Squared Euclidean norm over all real dimensions.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }
}

/// One draw of the fading process: complex taps of shape (rx x tx).
///
/// SISO is the 1x1 case (a single scalar tap). Taps are stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    rx: usize,
    tx: usize,
    taps: Vec<(f64, f64)>,
}

impl ChannelRealization {
    pub fn new(rx: usize, tx: usize, taps: Vec<(f64, f64)>) -> Result<Self> {
        if rx == 0 || tx == 0 || taps.len() != rx * tx {
            return Err(Error::contract(format!(
                "channel realization shape mismatch: {rx}x{tx} with {} taps",
                taps.len()
            )));
        }
        if !taps.iter().all(|t| t.0.is_finite() && t.1.is_finite()) {
            return Err(Error::contract("channel taps must be finite"));
        }
        Ok(ChannelRealization { rx, tx, taps })
    }

    /// Scalar-tap SISO realization.
    pub fn siso(tap: (f64, f64)) -> Self {
        ChannelRealization {
            rx: 1,
            tx: 1,
            taps: vec![tap],
        }
    }

    /// Identity taps (1 on the diagonal); used for AWGN-only mode.
    pub fn identity(antennas: usize) -> Self {
        let mut taps = vec![(0.0, 0.0); antennas * antennas];
        for i in 0..antennas {
            taps[i * antennas + i] = (1.0, 0.0);
        }
        ChannelRealization {
            rx: antennas,
            tx: antennas,
            taps,
        }
    }

    pub fn rx(&self) -> usize {
        self.rx
    }

    pub fn tx(&self) -> usize {
        self.tx
    }

    /// Tap h_{i,j} from transmit antenna j to receive antenna i.
    pub fn tap(&self, i: usize, j: usize) -> (f64, f64) {
        self.taps[i * self.tx + j]
    }

    /// Row-major taps flattened to interleaved reals (used for genie CSI).
    pub fn to_reals(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.taps.len() * 2);
        for &(re, im) in &self.taps {
            v.push(re);
            v.push(im);
        }
        v
    }
}

/// The fading realizations one message passes through.
///
/// Holds one realization in block-fading mode, or one per complex sample in
/// per-use mode.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDraw {
    realizations: Vec<ChannelRealization>,
}

impl ChannelDraw {
    pub fn block(realization: ChannelRealization) -> Self {
        ChannelDraw {
            realizations: vec![realization],
        }
    }

    pub fn per_use(realizations: Vec<ChannelRealization>) -> Result<Self> {
        if realizations.is_empty() {
            return Err(Error::contract("per-use draw needs at least one realization"));
        }
        Ok(ChannelDraw { realizations })
    }

    pub fn is_block(&self) -> bool {
        self.realizations.len() == 1
    }

    pub fn first(&self) -> &ChannelRealization {
        &self.realizations[0]
    }

    /// Realization governing complex sample `t`.
    pub fn for_sample(&self, t: usize) -> &ChannelRealization {
        if self.realizations.len() == 1 {
            &self.realizations[0]
        } else {
            &self.realizations[t]
        }
    }
}

/// Noise variance bookkeeping tying Eb/N0 to the per-dimension variance β.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    ebn0_db: f64,
    rate: f64,
    beta: f64,
}

impl NoiseSpec {
    pub fn from_ebn0(ebn0_db: f64, rate: f64) -> Result<Self> {
        let beta = ebn0_to_beta(ebn0_db, rate)?;
        Ok(NoiseSpec {
            ebn0_db,
            rate,
            beta,
        })
    }

    /// β = 0; used for noiseless sanity paths.
    pub fn noiseless(rate: f64) -> Self {
        NoiseSpec {
            ebn0_db: f64::INFINITY,
            rate,
            beta: 0.0,
        }
    }

    /// Noise variance per real dimension.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn ebn0_db(&self) -> f64 {
        self.ebn0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// β = 1 / (2 R 10^(EbN0/10)), per real dimension.
pub fn ebn0_to_beta(ebn0_db: f64, rate: f64) -> Result<f64> {
    if !(rate > 0.0) {
        return Err(Error::contract(format!("rate must be positive, got {rate}")));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// Inverse of [`ebn0_to_beta`].
pub fn beta_to_ebn0(beta: f64, rate: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * beta)).log10()
}

/// One i.i.d. Rayleigh tap h = (a + ib)/√2 with a, b standard normal, so
/// E[|h|²] = 1.
pub fn sample_rayleigh_tap(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    (a / std::f64::consts::SQRT_2, b / std::f64::consts::SQRT_2)
}

/// Draws an (m_r x m_t) matrix of independent Rayleigh taps, row-major.
pub fn sample_mimo_channel(rng: &mut ChaCha8Rng, m_t: usize, m_r: usize) -> ChannelRealization {
    let mut taps = Vec::with_capacity(m_r * m_t);
    for _ in 0..m_r * m_t {
        taps.push(sample_rayleigh_tap(rng));
    }
    ChannelRealization {
        rx: m_r,
        tx: m_t,
        taps,
    }
}

/// Samples the fading for one message: identity taps in AWGN-only mode,
/// one Rayleigh realization in block mode, or one per complex sample.
pub fn sample_channel_draw(
    model: ChannelModel,
    fading: FadingMode,
    m_t: usize,
    m_r: usize,
    samples_per_stream: usize,
    rng: &mut ChaCha8Rng,
) -> ChannelDraw {
    match model {
        ChannelModel::AwgnOnly => {
            debug_assert_eq!(m_t, m_r);
            ChannelDraw::block(ChannelRealization::identity(m_t))
        }
        ChannelModel::Rayleigh => match fading {
            FadingMode::Block => ChannelDraw::block(sample_mimo_channel(rng, m_t, m_r)),
            FadingMode::PerUse => {
                let reals = (0..samples_per_stream)
                    .map(|_| sample_mimo_channel(rng, m_t, m_r))
                    .collect();
                ChannelDraw::per_use(reals).expect("samples_per_stream > 0")
            }
        },
    }
}

/// Applies the channel to an interleaved multi-stream signal.
///
/// `x` holds `tx` antenna streams of `t_len` complex samples each, laid out
/// stream-major: reals `[2*j*t_len, 2*(j+1)*t_len)` belong to antenna j.
/// The output holds `rx` streams in the same layout with
/// `y_i[t] = Σ_j h_{i,j} x_j[t]`.
pub(crate) fn apply_draw(draw: &ChannelDraw, x: &[f64], tx: usize, rx: usize) -> Vec<f64> {
    debug_assert_eq!(x.len() % (2 * tx), 0);
    let t_len = x.len() / (2 * tx);
    let mut y = vec![0.0; 2 * rx * t_len];
    for t in 0..t_len {
        let h = draw.for_sample(t);
        debug_assert_eq!((h.rx, h.tx), (rx, tx));
        for i in 0..rx {
            let (mut yr, mut yi) = (0.0, 0.0);
            for j in 0..tx {
                let (a, b) = h.tap(i, j);
                let xr = x[2 * (j * t_len + t)];
                let xi = x[2 * (j * t_len + t) + 1];
                yr += a * xr - b * xi;
                yi += b * xr + a * xi;
            }
            y[2 * (i * t_len + t)] = yr;
            y[2 * (i * t_len + t) + 1] = yi;
        }
    }
    y
}

/// Transpose of the real linear map of [`apply_draw`], taps held fixed.
///
/// The real 2x2 block of a tap a+ib is [[a,-b],[b,a]]; its transpose is the
/// block of the conjugate tap, so this is the exact reverse-mode rule for
/// the channel-multiply layer.
pub(crate) fn apply_draw_transpose(
    draw: &ChannelDraw,
    g_out: &[f64],
    tx: usize,
    rx: usize,
) -> Vec<f64> {
    debug_assert_eq!(g_out.len() % (2 * rx), 0);
    let t_len = g_out.len() / (2 * rx);
    let mut g_in = vec![0.0; 2 * tx * t_len];
    for t in 0..t_len {
        let h = draw.for_sample(t);
        for j in 0..tx {
            let (mut gr, mut gi) = (0.0, 0.0);
            for i in 0..rx {
                let (a, b) = h.tap(i, j);
                let yr = g_out[2 * (i * t_len + t)];
                let yi = g_out[2 * (i * t_len + t) + 1];
                gr += a * yr + b * yi;
                gi += -b * yr + a * yi;
            }
            g_in[2 * (j * t_len + t)] = gr;
            g_in[2 * (j * t_len + t) + 1] = gi;
        }
    }
    g_in
}

/// y = H x for one realization applied to the whole signal.
pub fn apply_channel(channel: &ChannelRealization, x: &ComplexSignal) -> Result<ComplexSignal> {
    if x.as_slice().len() % (2 * channel.tx) != 0 {
        return Err(Error::contract(format!(
            "signal of {} reals does not partition into {} streams",
            x.as_slice().len(),
            channel.tx
        )));
    }
    let draw = ChannelDraw::block(channel.clone());
    let y = apply_draw(&draw, x.as_slice(), channel.tx, channel.rx);
    ComplexSignal::new(y)
}

/// Gaussian noise with variance `beta` on every real dimension.
pub fn sample_noise(beta: f64, width: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if !(beta >= 0.0) {
        return Err(Error::contract(format!("noise variance must be >= 0, got {beta}")));
    }
    if beta == 0.0 {
        return Ok(vec![0.0; width]);
    }
    let sigma = beta.sqrt();
    Ok((0..width)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            sigma * z
        })
        .collect())
}

/// y + n with n i.i.d. Gaussian of variance β per real dimension (so 2β per
/// complex sample).
pub fn add_awgn(y: &ComplexSignal, spec: &NoiseSpec, rng: &mut ChaCha8Rng) -> ComplexSignal {
    let noise = sample_noise(spec.beta(), y.as_slice().len(), rng).expect("beta >= 0 by invariant");
    let samples = y
        .as_slice()
        .iter()
        .zip(&noise)
        .map(|(v, n)| v + n)
        .collect();
    ComplexSignal { samples }
}
