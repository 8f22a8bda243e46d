//! Sparse autoencoder for one-class fingerprint verification.
//!
//! A single sigmoid hidden layer reconstructs the input through a linear
//! decoder. Training minimizes reconstruction MSE plus a KL sparsity penalty
//! on the mean hidden activation and a ridge penalty on the weights. After
//! training, a decision threshold is set from validation reconstruction
//! errors; inputs reconstructing below it are accepted as the target device.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::checkpoint::{load_checkpoint, save_checkpoint, ModelKind};
use super::layers::{Dense, Layer, Sigmoid};

/// Multiplier on the validation MSE spread when setting the threshold.
pub const THRESHOLD_SIGMAS: f64 = 3.5;

/// Floor applied to mean activations inside the KL penalty to keep its
/// derivative finite early in training.
const RHO_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoencoderConfig {
    pub input_dim: usize,
    pub hidden_units: usize,
    /// Weight on the KL sparsity penalty.
    pub sparsity_coefficient: f64,
    /// Target mean activation per hidden unit.
    pub sparsity_target: f64,
    /// Ridge penalty weight, applied to weights only.
    pub l2_coefficient: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            input_dim: 4096,
            hidden_units: 64,
            sparsity_coefficient: 0.5,
            sparsity_target: 0.05,
            l2_coefficient: 0.01,
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 60,
            seed: 0,
        }
    }
}

impl AutoencoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 {
            return Err(Error::InvalidConfig("layer sizes must be positive".into()));
        }
        if !(0.0 < self.sparsity_target && self.sparsity_target < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "sparsity target {} must lie in (0,1)",
                self.sparsity_target
            )));
        }
        for (name, v) in [
            ("sparsity coefficient", self.sparsity_coefficient),
            ("l2 coefficient", self.l2_coefficient),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} {v} out of range")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate out of range".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum out of range".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig("batch and epochs must be positive".into()));
        }
        Ok(())
    }
}

/// Acceptance threshold derived from validation reconstruction errors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdModel {
    pub tau: f64,
    pub mse_mean: f64,
    pub mse_std: f64,
}

impl ThresholdModel {
    /// `tau = mean + 3.5 * sample standard deviation` of the given MSEs.
    pub fn from_mses(mses: &[f64]) -> Result<Self> {
        if mses.is_empty() {
            return Err(Error::EmptyInput("threshold MSE set"));
        }
        let n = mses.len() as f64;
        let mean = mses.iter().sum::<f64>() / n;
        let std = if mses.len() < 2 {
            0.0
        } else {
            (mses.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Ok(Self {
            tau: mean + THRESHOLD_SIGMAS * std,
            mse_mean: mean,
            mse_std: std,
        })
    }

    /// True when the error is strictly below the threshold.
    pub fn accepts(&self, mse: f64) -> bool {
        mse < self.tau
    }
}

pub struct Autoencoder {
    pub config: AutoencoderConfig,
    enc: Dense,
    hid: Sigmoid,
    dec: Dense,
}

impl Autoencoder {
    pub fn new(config: AutoencoderConfig) -> Result<Self> {
        config.validate()?;
        let enc = Dense::new(config.input_dim, config.hidden_units, config.seed, 1);
        let hid = Sigmoid::new(config.hidden_units);
        let dec = Dense::new(config.hidden_units, config.input_dim, config.seed, 2);
        Ok(Self {
            config,
            enc,
            hid,
            dec,
        })
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::InvalidConfig(format!(
                "expected {} features per row, got {}",
                self.config.input_dim,
                x.ncols()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("autoencoder input"));
        }
        Ok(())
    }

    /// Hidden activations and reconstruction for a batch.
    fn run(&mut self, x: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
        let hidden = self.hid.forward(self.enc.forward(x.clone()));
        let recon = self.dec.forward(hidden.clone());
        (hidden, recon)
    }

    /// Per-row mean squared reconstruction error.
    pub fn mse_per_row(&mut self, x: &Array2<f64>) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let (_, recon) = self.run(x);
        let d = x.ncols() as f64;
        Ok((&recon - x)
            .rows()
            .into_iter()
            .map(|r| r.iter().map(|e| e * e).sum::<f64>() / d)
            .collect())
    }

    pub(super) fn param_views(&mut self) -> Vec<(&mut Array2<f64>, &mut Array2<f64>)> {
        let mut out = self.enc.params();
        out.extend(self.dec.params());
        out
    }

    fn zero_grads(&mut self) {
        self.enc.zero_grads();
        self.dec.zero_grads();
    }

    /// Full training objective on a batch: mean reconstruction MSE, plus the
    /// KL sparsity penalty on batch-mean hidden activations, plus the ridge
    /// term. Used by the gradient checker; must stay in lockstep with
    /// `grad_step_parts`.
    pub(super) fn loss_only(&mut self, x: &Array2<f64>) -> f64 {
        let (hidden, recon) = self.run(x);
        let b = x.nrows() as f64;
        let d = x.ncols() as f64;
        let recon_loss = (&recon - x).mapv(|e| e * e).sum() / (b * d);
        let rho = self.config.sparsity_target;
        let kl: f64 = hidden
            .mean_axis(Axis(0))
            .unwrap()
            .iter()
            .map(|&m| {
                let m = m.clamp(RHO_EPS, 1.0 - RHO_EPS);
                rho * (rho / m).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - m)).ln()
            })
            .sum();
        let ridge = 0.5
            * self.config.l2_coefficient
            * (self.enc.w.mapv(|w| w * w).sum() + self.dec.w.mapv(|w| w * w).sum());
        recon_loss + self.config.sparsity_coefficient * kl + ridge
    }

    /// Accumulates gradients of the full objective for one batch and returns
    /// its loss.
    pub(super) fn loss_and_grads(&mut self, x: &Array2<f64>) -> f64 {
        self.zero_grads();
        let (hidden, recon) = self.run(x);
        let b = x.nrows() as f64;
        let d = x.ncols() as f64;
        let err = &recon - x;
        let recon_loss = err.mapv(|e| e * e).sum() / (b * d);

        let rho = self.config.sparsity_target;
        let beta = self.config.sparsity_coefficient;
        let means = hidden.mean_axis(Axis(0)).unwrap();
        let kl: f64 = means
            .iter()
            .map(|&m| {
                let m = m.clamp(RHO_EPS, 1.0 - RHO_EPS);
                rho * (rho / m).ln() + (1.0 - rho) * ((1.0 - rho) / (1.0 - m)).ln()
            })
            .sum();
        // d(KL)/d(mean_j) spread evenly over the batch rows.
        let kl_row = means.mapv(|m| {
            let m = m.clamp(RHO_EPS, 1.0 - RHO_EPS);
            beta * (-rho / m + (1.0 - rho) / (1.0 - m)) / b
        });

        let g_recon = err.mapv(|e| 2.0 * e / (b * d));
        let mut g_hidden = self.dec.backward(g_recon);
        g_hidden += &kl_row.broadcast(g_hidden.dim()).unwrap();
        let g_pre = self.hid.backward(g_hidden);
        self.enc.backward(g_pre);

        let lambda = self.config.l2_coefficient;
        let ridge = 0.5 * lambda * (self.enc.w.mapv(|w| w * w).sum() + self.dec.w.mapv(|w| w * w).sum());
        self.enc.add_weight_decay_grad(lambda);
        self.dec.add_weight_decay_grad(lambda);

        recon_loss + beta * kl + ridge
    }

    pub fn save(&mut self, path: &Path, threshold: Option<&ThresholdModel>) -> Result<()> {
        let meta = AeMeta {
            config: self.config.clone(),
            threshold: threshold.copied(),
        };
        let cfg = serde_json::to_string(&meta)?;
        let seed = self.config.seed;
        let params = self.param_views();
        let tensors: Vec<&Array2<f64>> = params.iter().map(|(w, _)| &**w).collect();
        save_checkpoint(path, ModelKind::Autoencoder, seed, &cfg, &tensors)
    }

    pub fn load(path: &Path) -> Result<(Self, Option<ThresholdModel>)> {
        let ck = load_checkpoint(path)?;
        if ck.kind != ModelKind::Autoencoder {
            return Err(Error::BadCheckpoint(format!(
                "expected an autoencoder checkpoint, found {:?}",
                ck.kind
            )));
        }
        let meta: AeMeta = serde_json::from_str(&ck.config_json)?;
        let mut model = Autoencoder::new(meta.config)?;
        let params = model.param_views();
        if params.len() != ck.tensors.len() {
            return Err(Error::BadCheckpoint(format!(
                "expected {} tensors, found {}",
                params.len(),
                ck.tensors.len()
            )));
        }
        for ((w, _), t) in params.into_iter().zip(&ck.tensors) {
            if w.dim() != t.dim() {
                return Err(Error::BadCheckpoint(format!(
                    "tensor shape {:?} does not match model shape {:?}",
                    t.dim(),
                    w.dim()
                )));
            }
            w.assign(t);
        }
        Ok((model, meta.threshold))
    }
}

#[derive(Serialize, Deserialize)]
struct AeMeta {
    config: AutoencoderConfig,
    threshold: Option<ThresholdModel>,
}

/// A fitted autoencoder with its acceptance threshold and diagnostics.
pub struct TrainedAutoencoder {
    pub model: Autoencoder,
    pub threshold: ThresholdModel,
    pub val_mse: Vec<f64>,
    pub train_loss: Vec<f64>,
}

impl TrainedAutoencoder {
    /// Accept/reject plus the raw error for each row.
    pub fn decide(&mut self, x: &Array2<f64>) -> Result<Vec<(bool, f64)>> {
        let mses = self.model.mse_per_row(x)?;
        Ok(mses
            .into_iter()
            .map(|m| (self.threshold.accepts(m), m))
            .collect())
    }
}

/// Trains on images of a single device and sets the acceptance threshold
/// from the validation reconstruction errors.
pub fn train_autoencoder(
    cfg: &AutoencoderConfig,
    train: &Array2<f64>,
    val: &Array2<f64>,
) -> Result<TrainedAutoencoder> {
    cfg.validate()?;
    let mut model = Autoencoder::new(cfg.clone())?;
    model.check_input(train)?;
    model.check_input(val)?;

    let mut velocity: Vec<Array2<f64>> = model
        .param_views()
        .iter()
        .map(|(w, _)| Array2::zeros(w.dim()))
        .collect();
    let mut order: Vec<usize> = (0..train.nrows()).collect();
    let mut train_loss = Vec::with_capacity(cfg.max_epochs);
    for epoch in 0..cfg.max_epochs {
        let mut rng = crate::seed::derive_rng(cfg.seed, &[0x4145, epoch as u64]);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let x = gather_rows(train, chunk);
            let loss = model.loss_and_grads(&x);
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("loss {loss}"),
                });
            }
            for ((w, g), v) in model.param_views().into_iter().zip(&mut velocity) {
                v.zip_mut_with(g, |v, &g| *v = cfg.momentum * *v - cfg.learning_rate * g);
                *w += &*v;
            }
            loss_sum += loss;
            batches += 1;
        }
        train_loss.push(loss_sum / batches.max(1) as f64);
    }

    let val_mse = model.mse_per_row(val)?;
    let threshold = ThresholdModel::from_mses(&val_mse)?;
    Ok(TrainedAutoencoder {
        model,
        threshold,
        val_mse,
        train_loss,
    })
}

fn gather_rows(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).assign(&x.row(i));
    }
    out
}
