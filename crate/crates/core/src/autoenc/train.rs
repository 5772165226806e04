//! Mini-batch SGD training of the autoencoder transceivers.
//!
//! Each iteration samples `batch` uniform messages with fresh channel and
//! noise draws at the training Eb/N0 (online regime: there is no finite
//! dataset), averages the per-sample cross-entropy gradients, and applies
//! one plain SGD step. Training is strictly sequential so `(seed, config)`
//! determines the final parameters bit for bit.

use rand::Rng;

use super::{TrainedModel, Word};
use crate::channel::{sample_channel_draw, sample_noise, NoiseSpec};
use crate::nn::{GradientSet, PassDraws, Target};
use crate::rng::{stream_rng, STREAM_TRAIN};
use crate::{Error, Result};

/// Trains a SISO model with the configuration it was built with.
pub fn train_siso(model: TrainedModel) -> Result<TrainedModel> {
    if model.is_mimo() {
        return Err(Error::contract("train_siso called on a MIMO model"));
    }
    run_training(model)
}

/// Trains a 2x2 MIMO model on the γ-weighted two-head loss.
pub fn train_mimo(model: TrainedModel) -> Result<TrainedModel> {
    if !model.is_mimo() {
        return Err(Error::contract("train_mimo called on a SISO model"));
    }
    run_training(model)
}

fn run_training(mut model: TrainedModel) -> Result<TrainedModel> {
    let system = model.system;
    let cfg = model.train;
    let gamma = model.gamma;
    let m = system.messages();
    let spec = NoiseSpec::from_ebn0(cfg.ebn0_db, system.rate())?;
    let beta = spec.beta();
    let noise_width = model.network.arch().noise_width();
    let divergence_guard = 10.0 * (m as f64).ln();

    let mut rng = stream_rng(cfg.seed, STREAM_TRAIN, 0);
    let mut trajectory = Vec::with_capacity(cfg.iterations);
    let mut saturated: u64 = 0;

    for iteration in 0..cfg.iterations {
        let mut grads = GradientSet::zeros_like(model.network.params());
        let mut loss_sum = 0.0;
        for _ in 0..cfg.batch {
            // Draw order is fixed: message(s), then channel, then noise.
            let (word, target) = match gamma {
                None => {
                    let s = rng.gen_range(0..m);
                    (Word::Single(s), Target::Single(s))
                }
                Some(g) => {
                    let s1 = rng.gen_range(0..m);
                    let s2 = rng.gen_range(0..m);
                    (
                        Word::Pair(s1, s2),
                        Target::Pair {
                            first: s1,
                            second: s2,
                            gamma: g,
                        },
                    )
                }
            };
            let input = model.input_vector(word)?;
            let draw = sample_channel_draw(
                cfg.channel,
                cfg.fading,
                system.m_t,
                system.m_r,
                system.n,
                &mut rng,
            );
            let noise = sample_noise(beta, noise_width, &mut rng)?;
            let pass = model.network.forward(
                &input,
                &PassDraws {
                    channel: &draw,
                    noise: &noise,
                },
            )?;
            let (loss, sat) = model.network.loss(&pass.heads, &target)?;
            let g = model.network.backward(&pass.trace, &target)?;
            grads.accumulate(&g);
            loss_sum += loss;
            if sat {
                saturated += 1;
            }
        }
        let batch_loss = loss_sum / cfg.batch as f64;
        trajectory.push(batch_loss);
        if !batch_loss.is_finite() || batch_loss > divergence_guard {
            return Err(Error::TrainingDiverged {
                iteration,
                loss: batch_loss,
            });
        }
        grads.scale(1.0 / cfg.batch as f64);
        model.network.params_mut().sgd_step(&grads, cfg.eta)?;
        // Runaway steps can blow parameters up to inf/NaN before the loss
        // guard sees them (the cross-entropy clamp bounds the loss itself).
        let exploded = model
            .network
            .params()
            .layers()
            .iter()
            .any(|l| !l.weights().iter().chain(l.bias().iter()).all(|v| v.is_finite()));
        if exploded {
            return Err(Error::TrainingDiverged {
                iteration,
                loss: f64::NAN,
            });
        }
    }

    model.meta.trained = true;
    model.meta.final_loss = trajectory.last().copied().unwrap_or(f64::NAN);
    model.meta.loss_trajectory = trajectory;
    model.meta.saturated_samples = saturated;
    Ok(model)
}
