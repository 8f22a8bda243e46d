//! Shared minibatch training loop for the softmax classifiers.

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::derive_rng;

use super::data::Dataset;
use super::net::{argmax_rows, softmax_ce, Network, Sgd};

const SHUFFLE_TAG: u64 = 0x4550;

/// Optimization schedule shared by the image and raw-sample classifiers.
#[derive(Debug, Clone)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    /// Number of trailing validation scores inspected for the plateau test.
    pub stop_window: usize,
    /// Plateau declared when the variance of those scores, in percentage
    /// points squared, falls below this.
    pub stop_variance: f64,
}

impl TrainParams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be positive".into()));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!("lr {} out of range", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum {} out of range",
                self.momentum
            )));
        }
        if self.stop_window < 2 {
            return Err(Error::InvalidConfig("stop window must be at least 2".into()));
        }
        if !(self.stop_variance.is_finite() && self.stop_variance >= 0.0) {
            return Err(Error::InvalidConfig("stop variance out of range".into()));
        }
        Ok(())
    }
}

/// Per-epoch record kept in training history.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Population variance of the trailing window of validation accuracies,
/// expressed in percentage points squared.
fn plateau_variance(history: &[EpochStats], window: usize) -> Option<f64> {
    if history.len() < window {
        return None;
    }
    let tail = &history[history.len() - window..];
    let pct: Vec<f64> = tail.iter().map(|e| e.val_accuracy * 100.0).collect();
    let mean = pct.iter().sum::<f64>() / window as f64;
    Some(pct.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / window as f64)
}

/// Runs cross-entropy minibatch training until the epoch budget is spent or
/// validation accuracy plateaus. Returns the per-epoch history.
pub fn fit_softmax(
    net: &mut Network,
    params: &TrainParams,
    train: &Dataset,
    val: &Dataset,
) -> Result<Vec<EpochStats>> {
    params.validate()?;
    if train.feature_len() != val.feature_len() {
        return Err(Error::InvalidConfig(
            "train and validation feature lengths differ".into(),
        ));
    }
    let mut opt = Sgd::new(params.lr, params.momentum);
    let mut history = Vec::with_capacity(params.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..params.epochs {
        let mut rng = derive_rng(params.seed, &[SHUFFLE_TAG, epoch as u64]);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(params.batch) {
            let (x, y) = train.gather(chunk);
            net.zero_grads();
            let logits = net.forward(&x);
            let (loss, grad) = softmax_ce(&logits, &y)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    detail: format!("loss {loss}"),
                });
            }
            net.backward(grad);
            opt.step(net);
            loss_sum += loss;
            n_batches += 1;
        }
        let val_accuracy = accuracy_on(net, val, params.batch.max(64));
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / n_batches.max(1) as f64,
            val_accuracy,
        });
        if let Some(var) = plateau_variance(&history, params.stop_window) {
            if var < params.stop_variance {
                break;
            }
        }
    }
    Ok(history)
}

/// Predicted class per row, evaluated in bounded-size batches.
pub fn predict_batched(net: &mut Network, x: &Array2<f64>, batch: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(x.nrows());
    let mut row = 0;
    while row < x.nrows() {
        let hi = (row + batch.max(1)).min(x.nrows());
        let logits = net.forward(&x.slice(ndarray::s![row..hi, ..]).to_owned());
        out.extend(argmax_rows(&logits));
        row = hi;
    }
    out
}

/// Class probabilities per row, evaluated in bounded-size batches.
pub fn predict_proba_batched(net: &mut Network, x: &Array2<f64>, batch: usize) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), net.out_len()));
    let mut row = 0;
    while row < x.nrows() {
        let hi = (row + batch.max(1)).min(x.nrows());
        let logits = net.forward(&x.slice(ndarray::s![row..hi, ..]).to_owned());
        let probs = super::net::softmax(&logits);
        out.slice_mut(ndarray::s![row..hi, ..]).assign(&probs);
        row = hi;
    }
    out
}

/// Fraction of dataset rows whose argmax prediction matches the label.
pub fn accuracy_on(net: &mut Network, ds: &Dataset, batch: usize) -> f64 {
    if ds.is_empty() {
        return 0.0;
    }
    let pred = predict_batched(net, &ds.x, batch);
    let hits = pred.iter().zip(&ds.y).filter(|(p, y)| p == y).count();
    hits as f64 / ds.len() as f64
}
