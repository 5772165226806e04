//! Central finite-difference verification of the analytic gradients.

use super::network::{Network, PassDraws, Target};
use crate::channel::ChannelDraw;
use crate::{Error, Result};

/// One frozen sample for gradient verification: the stochastic draws are
/// fixed and reused for every perturbed evaluation.
#[derive(Clone, Debug)]
pub struct GradCheckSample {
    pub input: Vec<f64>,
    pub target: Target,
    pub channel: ChannelDraw,
    pub noise: Vec<f64>,
}

/// Outcome of a finite-difference check.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckReport {
    /// max over parameters of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    pub max_rel_error: f64,
    /// Parameters included in the max.
    pub params_checked: usize,
    /// Parameters excluded because a perturbed evaluation changed a ReLU
    /// activation pattern (central differences are invalid across a kink).
    pub params_skipped: usize,
}

/// Checks the analytic batch-mean gradient against central differences.
///
/// Perturbs one parameter at a time by ±epsilon and compares
/// `(f(θ+ε) - f(θ-ε)) / 2ε` with the analytic entry. Parameters whose
/// perturbation flips any ReLU sign in any batch sample are excluded from
/// the max.
pub fn finite_diff_gradcheck(
    network: &Network,
    batch: &[GradCheckSample],
    epsilon: f64,
) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::contract(format!(
            "epsilon {epsilon} outside [1e-7, 1e-3]"
        )));
    }
    if batch.is_empty() {
        return Err(Error::contract("gradcheck batch must be non-empty"));
    }

    // Analytic mean gradient over the batch.
    let mut analytic = super::GradientSet::zeros_like(network.params());
    for sample in batch {
        let pass = network.forward(
            &sample.input,
            &PassDraws {
                channel: &sample.channel,
                noise: &sample.noise,
            },
        )?;
        let g = network.backward(&pass.trace, &sample.target)?;
        analytic.accumulate(&g);
    }
    analytic.scale(1.0 / batch.len() as f64);

    let mut work = network.clone();
    let param_count = network.params().param_count();
    let mut max_rel = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;

    for i in 0..param_count {
        let original = work.params().get_flat(i);

        work.params_mut().set_flat(i, original + epsilon);
        let (loss_plus, sig_plus) = batch_loss(&work, batch)?;
        work.params_mut().set_flat(i, original - epsilon);
        let (loss_minus, sig_minus) = batch_loss(&work, batch)?;
        work.params_mut().set_flat(i, original);

        if sig_plus != sig_minus {
            skipped += 1;
            continue;
        }
        let numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
        let a = analytic.get_flat(i);
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
        checked += 1;
    }

    Ok(GradCheckReport {
        max_rel_error: max_rel,
        params_checked: checked,
        params_skipped: skipped,
    })
}

fn batch_loss(network: &Network, batch: &[GradCheckSample]) -> Result<(f64, Vec<bool>)> {
    let mut total = 0.0;
    let mut signature = Vec::new();
    for sample in batch {
        let pass = network.forward(
            &sample.input,
            &PassDraws {
                channel: &sample.channel,
                noise: &sample.noise,
            },
        )?;
        let (loss, _) = network.loss(&pass.heads, &sample.target)?;
        total += loss;
        signature.extend(network.relu_signature(&pass.trace));
    }
    Ok((total / batch.len() as f64, signature))
}

/// Generic central-difference check for a scalar function of a flat
/// parameter vector; returns the max relative error against `analytic`.
pub fn max_relative_error(
    theta: &mut [f64],
    mut eval: impl FnMut(&[f64]) -> f64,
    analytic: &[f64],
    epsilon: f64,
) -> f64 {
    assert_eq!(theta.len(), analytic.len());
    let mut max_rel = 0.0f64;
    for i in 0..theta.len() {
        let original = theta[i];
        theta[i] = original + epsilon;
        let plus = eval(theta);
        theta[i] = original - epsilon;
        let minus = eval(theta);
        theta[i] = original;
        let numeric = (plus - minus) / (2.0 * epsilon);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_has_near_exact_central_differences() {
        // f(θ) = Σ a_i θ_i² + b_i θ_i; central differences are exact for
        // quadratics up to rounding.
        let a = [1.5, -0.25, 3.0, 0.75];
        let b = [0.5, 2.0, -1.0, 0.0];
        let mut theta = vec![0.3, -1.2, 0.7, 2.5];
        let analytic: Vec<f64> = theta
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(&t, (&ai, &bi))| 2.0 * ai * t + bi)
            .collect();
        let rel = max_relative_error(
            &mut theta,
            |t| {
                t.iter()
                    .zip(a.iter().zip(&b))
                    .map(|(&ti, (&ai, &bi))| ai * ti * ti + bi * ti)
                    .sum()
            },
            &analytic,
            1e-4,
        );
        assert!(rel < 1e-7, "relative error {rel}");
    }

    #[test]
    fn epsilon_range_is_enforced() {
        let arch = crate::nn::Architecture::new(
            2,
            vec![
                crate::nn::LayerSpec::Dense {
                    in_width: 2,
                    out_width: 2,
                    activation: crate::nn::Activation::Linear,
                },
                crate::nn::LayerSpec::Normalize { width: 2 },
                crate::nn::LayerSpec::SoftmaxHeads { width: 2, heads: 1 },
            ],
        )
        .unwrap();
        let mut rng = crate::rng::stream_rng(1, 0, 0);
        let net = Network::init(arch, &mut rng);
        let sample = GradCheckSample {
            input: vec![1.0, 0.0],
            target: Target::Single(0),
            channel: ChannelDraw::block(crate::channel::ChannelRealization::identity(1)),
            noise: vec![],
        };
        assert!(finite_diff_gradcheck(&net, &[sample.clone()], 1e-2).is_err());
        assert!(finite_diff_gradcheck(&net, &[sample], 1e-8).is_err());
        assert!(finite_diff_gradcheck(&net, &[], 1e-5).is_err());
    }
}
