//! Multiclass image classifier: an optional convolution stage feeding a
//! dense softmax stack, trained with momentum SGD and an accuracy-plateau
//! stopping rule.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::checkpoint::{load_checkpoint, save_checkpoint, ModelKind};
use super::data::Dataset;
use super::layers::{Conv2d, Dense, Layer, MaxPool2d, Tanh};
use super::net::Network;
use super::trainer::{fit_softmax, predict_batched, predict_proba_batched, EpochStats, TrainParams};

/// Front-end convolution stage geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvStage {
    pub filters: usize,
    pub kernel: usize,
    pub pool: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    /// Input images are `input_side` x `input_side`, row-major, one channel.
    pub input_side: usize,
    pub num_classes: usize,
    /// Dense widths between the flattened features and the logits.
    pub hidden_widths: Vec<usize>,
    pub conv_stage: Option<ConvStage>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Trailing validation evaluations inspected by the stopping rule.
    pub stop_window: usize,
    /// Stop when their variance, in percentage points squared, drops below
    /// this. Zero disables early stopping.
    pub stop_variance: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            input_side: 64,
            num_classes: 10,
            hidden_widths: vec![128],
            conv_stage: Some(ConvStage {
                filters: 8,
                kernel: 5,
                pool: 2,
            }),
            learning_rate: 0.02,
            momentum: 0.9,
            batch_size: 32,
            max_epochs: 30,
            stop_window: 5,
            stop_variance: 0.5,
            seed: 0,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_side == 0 {
            return Err(Error::InvalidConfig("input side must be positive".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if let Some(cs) = &self.conv_stage {
            if cs.filters == 0 || cs.kernel == 0 || cs.pool == 0 {
                return Err(Error::InvalidConfig("conv stage sizes must be positive".into()));
            }
            if cs.kernel > self.input_side {
                return Err(Error::InvalidConfig(format!(
                    "kernel {} exceeds input side {}",
                    cs.kernel, self.input_side
                )));
            }
            let side = self.input_side - cs.kernel + 1;
            if side % cs.pool != 0 {
                return Err(Error::InvalidConfig(format!(
                    "pool {} does not tile the {}-wide conv output",
                    cs.pool, side
                )));
            }
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        self.train_params().validate()
    }

    pub fn feature_len(&self) -> usize {
        self.input_side * self.input_side
    }

    fn train_params(&self) -> TrainParams {
        TrainParams {
            epochs: self.max_epochs,
            batch: self.batch_size,
            lr: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
            stop_window: self.stop_window,
            stop_variance: self.stop_variance,
        }
    }

    pub(super) fn build(&self) -> Network {
        let mut layers: Vec<Box<dyn Layer>> = Vec::new();
        let mut width;
        if let Some(cs) = &self.conv_stage {
            let conv = Conv2d::new(
                1,
                cs.filters,
                cs.kernel,
                self.input_side,
                self.input_side,
                self.seed,
                1,
            );
            let (oh, ow) = (conv.out_h(), conv.out_w());
            layers.push(Box::new(conv));
            layers.push(Box::new(Tanh::new(cs.filters * oh * ow)));
            let pool = MaxPool2d::new(cs.filters, oh, ow, cs.pool);
            width = cs.filters * pool.out_h() * pool.out_w();
            layers.push(Box::new(pool));
        } else {
            width = self.feature_len();
        }
        for (i, &w) in self.hidden_widths.iter().enumerate() {
            layers.push(Box::new(Dense::new(width, w, self.seed, 10 + i as u64)));
            layers.push(Box::new(Tanh::new(w)));
            width = w;
        }
        layers.push(Box::new(Dense::new(
            width,
            self.num_classes,
            self.seed,
            10 + self.hidden_widths.len() as u64,
        )));
        Network::new(layers)
    }
}

/// A fitted classifier together with its training history.
pub struct TrainedClassifier {
    pub config: ClassifierConfig,
    pub net: Network,
    pub history: Vec<EpochStats>,
}

impl TrainedClassifier {
    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.config.feature_len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} features per image, got {}",
                self.config.feature_len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Argmax class per row.
    pub fn predict(&mut self, x: &Array2<f64>) -> Result<Vec<usize>> {
        self.check_input(x)?;
        Ok(predict_batched(&mut self.net, x, 64))
    }

    /// Class probabilities per row.
    pub fn predict_proba(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(predict_proba_batched(&mut self.net, x, 64))
    }

    /// Fraction of rows classified correctly.
    pub fn accuracy(&mut self, ds: &Dataset) -> Result<f64> {
        let pred = self.predict(&ds.x)?;
        let hits = pred.iter().zip(&ds.y).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / ds.len().max(1) as f64)
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        let cfg = serde_json::to_string(&self.config)?;
        let params = self.net.params();
        let tensors: Vec<&Array2<f64>> = params.iter().map(|(w, _)| &**w).collect();
        save_checkpoint(path, ModelKind::Classifier, self.config.seed, &cfg, &tensors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = load_checkpoint(path)?;
        if ck.kind != ModelKind::Classifier {
            return Err(Error::BadCheckpoint(format!(
                "expected a classifier checkpoint, found {:?}",
                ck.kind
            )));
        }
        let config: ClassifierConfig = serde_json::from_str(&ck.config_json)?;
        config.validate()?;
        let mut net = config.build();
        restore_params(&mut net, &ck.tensors)?;
        Ok(Self {
            config,
            net,
            history: Vec::new(),
        })
    }
}

/// Pours checkpoint tensors into a freshly built network, shape-checked.
pub(super) fn restore_params(net: &mut Network, tensors: &[Array2<f64>]) -> Result<()> {
    let params = net.params();
    if params.len() != tensors.len() {
        return Err(Error::BadCheckpoint(format!(
            "expected {} tensors, found {}",
            params.len(),
            tensors.len()
        )));
    }
    for ((w, _), t) in params.into_iter().zip(tensors) {
        if w.dim() != t.dim() {
            return Err(Error::BadCheckpoint(format!(
                "tensor shape {:?} does not match model shape {:?}",
                t.dim(),
                w.dim()
            )));
        }
        w.assign(t);
    }
    Ok(())
}

/// Trains on `train`, tracking accuracy on `val` for the stopping rule.
pub fn train_classifier(
    cfg: &ClassifierConfig,
    train: &Dataset,
    val: &Dataset,
) -> Result<TrainedClassifier> {
    cfg.validate()?;
    for (name, ds) in [("train", train), ("validation", val)] {
        if ds.feature_len() != cfg.feature_len() {
            return Err(Error::InvalidConfig(format!(
                "{name} set has {} features per row, model expects {}",
                ds.feature_len(),
                cfg.feature_len()
            )));
        }
        if ds.n_classes != cfg.num_classes {
            return Err(Error::InvalidConfig(format!(
                "{name} set labels {} classes, model expects {}",
                ds.n_classes, cfg.num_classes
            )));
        }
    }
    let mut seen = vec![false; cfg.num_classes];
    for &y in &train.y {
        seen[y] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(Error::InvalidConfig(
            "training labels are degenerate: fewer than 2 classes present".into(),
        ));
    }
    let mut net = cfg.build();
    let history = fit_softmax(&mut net, &cfg.train_params(), train, val)?;
    Ok(TrainedClassifier {
        config: cfg.clone(),
        net,
        history,
    })
}
