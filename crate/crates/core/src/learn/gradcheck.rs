//! Central finite-difference verification of every analytic gradient in the
//! trainable models. Run on small batches; the relative error should sit far
//! below 1e-4 at 64-bit precision.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::seed::derive_rng;

use super::autoencoder::{Autoencoder, AutoencoderConfig};
use super::classifier::ClassifierConfig;
use super::net::{softmax_ce, Network};
use super::rawiq::RawIqConfig;

const STEP: f64 = 1e-5;

/// Outcome of one finite-difference sweep.
#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    /// Parameter coordinates probed.
    pub checked: usize,
    pub max_rel_err: f64,
    pub mean_rel_err: f64,
}

impl GradCheckReport {
    pub fn passes(&self, bound: f64) -> bool {
        self.checked > 0 && self.max_rel_err < bound
    }
}

fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / (numeric.abs() + analytic.abs()).max(1e-8)
}

/// Spreads a probe budget over parameter tensors proportionally to size,
/// with at least one probe each.
fn pick_probes(
    shapes: &[(usize, usize)],
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize, usize)> {
    let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
    let mut probes = Vec::new();
    for (t, &(rows, cols)) in shapes.iter().enumerate() {
        let size = rows * cols;
        let quota = ((budget * size).div_ceil(total)).clamp(1, size);
        for _ in 0..quota {
            probes.push((t, rng.random_range(0..rows), rng.random_range(0..cols)));
        }
    }
    probes
}

fn summarize(errors: &[f64]) -> GradCheckReport {
    let max = errors.iter().copied().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    GradCheckReport {
        checked: errors.len(),
        max_rel_err: max,
        mean_rel_err: mean,
    }
}

fn bump(net: &mut Network, t: usize, r: usize, c: usize, dh: f64) {
    let mut params = net.params();
    params[t].0[[r, c]] += dh;
}

/// Checks a softmax network's backprop against finite differences of the
/// cross-entropy loss.
fn check_softmax_net(
    net: &mut Network,
    x: &Array2<f64>,
    labels: &[usize],
    budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<GradCheckReport> {
    net.zero_grads();
    let logits = net.forward(x);
    let (_, grad) = softmax_ce(&logits, labels)?;
    net.backward(grad);
    let analytic: Vec<Array2<f64>> = net.params().iter().map(|(_, g)| (**g).clone()).collect();
    let shapes: Vec<(usize, usize)> = analytic.iter().map(|g| g.dim()).collect();

    let mut errors = Vec::new();
    for (t, r, c) in pick_probes(&shapes, budget, rng) {
        bump(net, t, r, c, STEP);
        let up = softmax_ce(&net.forward(x), labels)?.0;
        bump(net, t, r, c, -2.0 * STEP);
        let down = softmax_ce(&net.forward(x), labels)?.0;
        bump(net, t, r, c, STEP);
        let numeric = (up - down) / (2.0 * STEP);
        errors.push(relative_error(numeric, analytic[t][[r, c]]));
    }
    Ok(summarize(&errors))
}

/// Round-robin labels over the configured class count.
fn cycle_labels(n: usize, classes: usize) -> Vec<usize> {
    (0..n).map(|i| i % classes).collect()
}

pub fn gradient_check_classifier(
    cfg: &ClassifierConfig,
    batch: usize,
    budget: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    cfg.validate()?;
    let mut rng = derive_rng(seed, &[0x4743, 0]);
    let x = Array2::from_shape_fn((batch, cfg.feature_len()), |_| rng.random_range(0.0..1.0));
    let labels = cycle_labels(batch, cfg.num_classes);
    let mut net = cfg.build();
    check_softmax_net(&mut net, &x, &labels, budget, &mut rng)
}

pub fn gradient_check_rawiq(
    cfg: &RawIqConfig,
    batch: usize,
    budget: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    cfg.validate()?;
    let mut rng = derive_rng(seed, &[0x4743, 1]);
    let x = Array2::from_shape_fn((batch, cfg.feature_len()), |_| rng.random_range(-1.0..1.0));
    let labels = cycle_labels(batch, cfg.num_classes);
    let mut net = cfg.build();
    check_softmax_net(&mut net, &x, &labels, budget, &mut rng)
}

/// Checks the autoencoder's full objective: reconstruction MSE plus the KL
/// sparsity penalty plus the ridge term.
pub fn gradient_check_autoencoder(
    cfg: &AutoencoderConfig,
    batch: usize,
    budget: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    cfg.validate()?;
    let mut rng = derive_rng(seed, &[0x4743, 2]);
    let x = Array2::from_shape_fn((batch, cfg.input_dim), |_| rng.random_range(0.0..1.0));
    let mut model = Autoencoder::new(cfg.clone())?;
    model.loss_and_grads(&x);
    let analytic: Vec<Array2<f64>> = model
        .param_views()
        .iter()
        .map(|(_, g)| (**g).clone())
        .collect();
    let shapes: Vec<(usize, usize)> = analytic.iter().map(|g| g.dim()).collect();

    let mut errors = Vec::new();
    for (t, r, c) in pick_probes(&shapes, budget, &mut rng) {
        {
            let mut params = model.param_views();
            params[t].0[[r, c]] += STEP;
        }
        let up = model.loss_only(&x);
        {
            let mut params = model.param_views();
            params[t].0[[r, c]] -= 2.0 * STEP;
        }
        let down = model.loss_only(&x);
        {
            let mut params = model.param_views();
            params[t].0[[r, c]] += STEP;
        }
        let numeric = (up - down) / (2.0 * STEP);
        errors.push(relative_error(numeric, analytic[t][[r, c]]));
    }
    Ok(summarize(&errors))
}
