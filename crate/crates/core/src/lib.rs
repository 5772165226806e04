//! Link-level simulation and learning toolkit for end-to-end transceivers.
//!
//! The crate trains fully connected autoencoder transceivers for SISO and
//! 2x2 MIMO links over Rayleigh fading, using an exact hand-rolled
//! reverse-mode gradient kernel, and benchmarks their bit error rate
//! against conventional coded/modulated chains across an Eb/N0 sweep.
//!
//! Module map:
//!
//! - [`nn`] — minimal deterministic feed-forward kernel with exact gradients
//!   for every layer the transceivers use (dense, ReLU, softmax, power
//!   normalization, fixed channel multiply, additive noise).
//! - [`channel`] — complex-baseband signals, Rayleigh fading and AWGN
//!   models, and the Eb/N0 ↔ noise-variance arithmetic.
//! - [`autoenc`] — builds the SISO/MIMO autoencoder architectures, trains
//!   them end-to-end through the channel, and runs transmit/decode.
//! - [`baselines`] — Hamming(7,4) + BPSK, QPSK spatial multiplexing with
//!   ML/ZF detection, and closed-form BER references.
//! - [`harness`] — Monte Carlo BER engine, sweep orchestration, CSV output,
//!   and the run configuration surface shared with the CLI.

pub mod autoenc;
pub mod baselines;
pub mod channel;
mod error;
pub mod harness;
pub mod nn;
pub mod rng;

pub use error::{Error, Result};
