//! Classifier operating directly on raw IQ sample windows instead of
//! constellation images. Each window is RMS-normalized and laid out as two
//! channel planes (all I values, then all Q values) for a strided 1-D
//! convolution front end.

use std::path::Path;

use ndarray::Array2;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::checkpoint::{load_checkpoint, save_checkpoint, ModelKind};
use super::classifier::restore_params;
use super::data::Dataset;
use super::layers::{Conv1d, Dense, Layer, MaxPool1d, Tanh};
use super::net::Network;
use super::trainer::{fit_softmax, predict_batched, predict_proba_batched, EpochStats, TrainParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RawIqConfig {
    /// IQ samples per input window.
    pub window: usize,
    pub num_classes: usize,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub pool: usize,
    pub hidden_widths: Vec<usize>,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub stop_window: usize,
    pub stop_variance: f64,
    pub seed: u64,
}

impl Default for RawIqConfig {
    fn default() -> Self {
        Self {
            window: 10_000,
            num_classes: 10,
            conv_filters: 8,
            conv_kernel: 33,
            conv_stride: 8,
            pool: 4,
            hidden_widths: vec![64],
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

impl RawIqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        if self.conv_filters == 0 || self.conv_kernel == 0 || self.conv_stride == 0 || self.pool == 0
        {
            return Err(Error::InvalidConfig("conv stage sizes must be positive".into()));
        }
        if self.window < self.conv_kernel {
            return Err(Error::InvalidConfig(format!(
                "window {} shorter than kernel {}",
                self.window, self.conv_kernel
            )));
        }
        let positions = (self.window - self.conv_kernel) / self.conv_stride + 1;
        if positions / self.pool == 0 {
            return Err(Error::InvalidConfig("pool swallows the whole conv output".into()));
        }
        if self.hidden_widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidConfig("hidden widths must be positive".into()));
        }
        self.train_params().validate()
    }

    /// Two channel planes of `window` values each.
    pub fn feature_len(&self) -> usize {
        2 * self.window
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
        let conv = Conv1d::new(
            2,
            self.conv_filters,
            self.conv_kernel,
            self.conv_stride,
            self.window,
            self.seed,
            1,
        );
        let positions = conv.out_positions();
        layers.push(Box::new(conv));
        layers.push(Box::new(Tanh::new(self.conv_filters * positions)));
        let pool = MaxPool1d::new(self.conv_filters, positions, self.pool);
        let mut width = self.conv_filters * pool.out_positions();
        layers.push(Box::new(pool));
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

/// One IQ window as a model input row: RMS-normalized, I plane then Q plane.
pub fn window_to_features<S: Scalar>(iq: &[Complex<S>]) -> Result<Vec<f64>> {
    if iq.is_empty() {
        return Err(Error::EmptyInput("IQ window"));
    }
    let power: f64 = iq.iter().map(|z| z.norm_sqr().into_f64()).sum::<f64>() / iq.len() as f64;
    if power <= 0.0 {
        return Err(Error::ZeroPower("IQ window"));
    }
    let rms = power.sqrt();
    let mut row = Vec::with_capacity(2 * iq.len());
    row.extend(iq.iter().map(|z| z.re.into_f64() / rms));
    row.extend(iq.iter().map(|z| z.im.into_f64() / rms));
    Ok(row)
}

/// Splits a capture into as many full windows as it contains and stacks the
/// feature rows. The ragged tail is dropped.
pub fn windows_to_rows<S: Scalar>(iq: &[Complex<S>], window: usize) -> Result<Array2<f64>> {
    if window == 0 {
        return Err(Error::InvalidConfig("window must be positive".into()));
    }
    let n = iq.len() / window;
    if n == 0 {
        return Err(Error::TooShort {
            what: "raw IQ capture",
            need: window,
            got: iq.len(),
        });
    }
    let mut out = Array2::zeros((n, 2 * window));
    for (r, chunk) in iq.chunks_exact(window).enumerate() {
        let row = window_to_features(chunk)?;
        out.row_mut(r).assign(&ndarray::ArrayView1::from(&row));
    }
    Ok(out)
}

/// A fitted raw-IQ classifier together with its training history.
pub struct TrainedRawIq {
    pub config: RawIqConfig,
    pub net: Network,
    pub history: Vec<EpochStats>,
}

impl TrainedRawIq {
    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.config.feature_len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} features per window, got {}",
                self.config.feature_len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn predict(&mut self, x: &Array2<f64>) -> Result<Vec<usize>> {
        self.check_input(x)?;
        Ok(predict_batched(&mut self.net, x, 32))
    }

    pub fn predict_proba(&mut self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(predict_proba_batched(&mut self.net, x, 32))
    }

    pub fn accuracy(&mut self, ds: &Dataset) -> Result<f64> {
        let pred = self.predict(&ds.x)?;
        let hits = pred.iter().zip(&ds.y).filter(|(p, y)| p == y).count();
        Ok(hits as f64 / ds.len().max(1) as f64)
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        let cfg = serde_json::to_string(&self.config)?;
        let params = self.net.params();
        let tensors: Vec<&Array2<f64>> = params.iter().map(|(w, _)| &**w).collect();
        save_checkpoint(path, ModelKind::RawIq, self.config.seed, &cfg, &tensors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck = load_checkpoint(path)?;
        if ck.kind != ModelKind::RawIq {
            return Err(Error::BadCheckpoint(format!(
                "expected a raw-IQ checkpoint, found {:?}",
                ck.kind
            )));
        }
        let config: RawIqConfig = serde_json::from_str(&ck.config_json)?;
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

/// Trains on feature rows produced by [`windows_to_rows`].
pub fn train_rawiq_classifier(
    cfg: &RawIqConfig,
    train: &Dataset,
    val: &Dataset,
) -> Result<TrainedRawIq> {
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
    let distinct = {
        let mut seen = vec![false; cfg.num_classes];
        for &y in &train.y {
            seen[y] = true;
        }
        seen.iter().filter(|s| **s).count()
    };
    if distinct < 2 {
        return Err(Error::InvalidConfig(
            "training labels are degenerate: fewer than 2 classes present".into(),
        ));
    }
    let mut net = cfg.build();
    let history = fit_softmax(&mut net, &cfg.train_params(), train, val)?;
    Ok(TrainedRawIq {
        config: cfg.clone(),
        net,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    type C = Complex<f64>;

    fn small_cfg(classes: usize) -> RawIqConfig {
        RawIqConfig {
            window: 256,
            num_classes: classes,
            conv_filters: 4,
            conv_kernel: 9,
            conv_stride: 4,
            pool: 4,
            hidden_widths: vec![16],
            learning_rate: 0.05,
            momentum: 0.9,
            batch_size: 8,
            max_epochs: 40,
            stop_window: 5,
            stop_variance: 0.5,
            seed: 3,
        }
    }

    fn normalization_is_scale_invariant_case(scale: f64) -> Vec<f64> {
        let mut rng = derive_rng(1, &[0x6e6f]);
        let iq: Vec<C> = (0..64)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex::new(re * scale, im * scale)
            })
            .collect();
        window_to_features(&iq).unwrap()
    }

    #[test]
    fn features_are_scale_invariant() {
        let a = normalization_is_scale_invariant_case(1.0);
        let b = normalization_is_scale_invariant_case(37.5);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn features_are_channel_planar() {
        let iq = [C::new(3.0, 4.0), C::new(-3.0, 4.0)];
        let row = window_to_features(&iq).unwrap();
        // RMS of both samples is 5.
        assert_eq!(row, vec![0.6, -0.6, 0.8, 0.8]);
    }

    #[test]
    fn silent_window_is_rejected() {
        let iq = vec![C::new(0.0, 0.0); 16];
        assert!(matches!(
            window_to_features(&iq),
            Err(Error::ZeroPower(_))
        ));
    }

    #[test]
    fn capture_splits_into_full_windows_only() {
        let iq: Vec<C> = (0..10).map(|k| C::new(1.0 + k as f64, 0.0)).collect();
        let rows = windows_to_rows(&iq, 4).unwrap();
        assert_eq!(rows.dim(), (2, 8));
        assert!(matches!(
            windows_to_rows(&iq[..3], 4),
            Err(Error::TooShort { .. })
        ));
    }

    /// Class is encoded as a tone frequency; initial phase and a little
    /// additive noise vary per window.
    fn toy_rawiq_dataset(per_class: usize, classes: usize, seed: u64) -> Dataset {
        let mut rng = derive_rng(seed, &[0x7277]);
        let window = 256;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..classes {
            let step = 0.1 + 0.7 * c as f64;
            for _ in 0..per_class {
                let phase0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let iq: Vec<C> = (0..window)
                    .map(|k| {
                        let ph = phase0 + step * k as f64;
                        let nr: f64 = StandardNormal.sample(&mut rng);
                        let ni: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(ph.cos() + 0.05 * nr, ph.sin() + 0.05 * ni)
                    })
                    .collect();
                rows.push(window_to_features(&iq).unwrap());
                labels.push(c);
            }
        }
        let x = Array2::from_shape_vec(
            (rows.len(), 2 * window),
            rows.into_iter().flatten().collect(),
        )
        .unwrap();
        Dataset::new(x, labels, classes).unwrap()
    }

    #[test]
    fn phase_rate_classes_separate() {
        let cfg = small_cfg(3);
        let train = toy_rawiq_dataset(24, 3, 1);
        let val = toy_rawiq_dataset(8, 3, 2);
        let test = toy_rawiq_dataset(12, 3, 3);
        let mut model = train_rawiq_classifier(&cfg, &train, &val).unwrap();
        let acc = model.accuracy(&test).unwrap();
        assert!(acc >= 0.9, "accuracy {acc}");
    }

    #[test]
    fn label_shuffling_destroys_the_signal() {
        let cfg = small_cfg(3);
        let mut train = toy_rawiq_dataset(24, 3, 4);
        let mut rng = derive_rng(9, &[0x7368]);
        rand::seq::SliceRandom::shuffle(train.y.as_mut_slice(), &mut rng);
        let val = toy_rawiq_dataset(8, 3, 5);
        let test = toy_rawiq_dataset(20, 3, 6);
        let mut model = train_rawiq_classifier(&cfg, &train, &val).unwrap();
        let acc = model.accuracy(&test).unwrap();
        assert!(acc < 0.6, "shuffled labels still gave accuracy {acc}");
    }

    #[test]
    fn checkpoint_roundtrip_reproduces_predictions() {
        let cfg = small_cfg(3);
        let train = toy_rawiq_dataset(12, 3, 7);
        let val = toy_rawiq_dataset(6, 3, 8);
        let mut model = train_rawiq_classifier(&cfg, &train, &val).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.hpck");
        model.save(&path).unwrap();
        let mut back = TrainedRawIq::load(&path).unwrap();
        assert_eq!(
            model.predict_proba(&val.x).unwrap(),
            back.predict_proba(&val.x).unwrap()
        );
    }
}
