//! Trainable models and evaluation tools: a compact convolutional image
//! classifier, a sparse autoencoder for one-class device verification, a
//! raw-sample classifier, gradient checking, metrics, and a PCA projection
//! for inspecting feature separability. Everything trains from scratch in
//! f64 on a single core with deterministic seeded initialization.

mod autoencoder;
mod checkpoint;
mod classifier;
mod data;
mod gradcheck;
mod layers;
mod metrics;
mod net;
mod pca;
mod rawiq;
mod trainer;

pub use autoencoder::{
    train_autoencoder, Autoencoder, AutoencoderConfig, ThresholdModel, TrainedAutoencoder,
    THRESHOLD_SIGMAS,
};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, ModelKind};
pub use classifier::{train_classifier, ClassifierConfig, ConvStage, TrainedClassifier};
pub use data::{split_stratified, Dataset};
pub use gradcheck::{
    gradient_check_autoencoder, gradient_check_classifier, gradient_check_rawiq, GradCheckReport,
};
pub use layers::{Conv1d, Conv2d, Dense, Layer, MaxPool1d, MaxPool2d, Sigmoid, Tanh};
pub use metrics::{
    auc, best_operating_point, evaluate, fpr_fnr_at, roc_curve, EvalReport, RocPoint,
};
pub use net::{argmax_rows, softmax, softmax_ce, Network, Sgd};
pub use pca::{pca_project, silhouette, PcaProjection};
pub use rawiq::{
    train_rawiq_classifier, window_to_features, windows_to_rows, RawIqConfig, TrainedRawIq,
};
pub use trainer::{accuracy_on, predict_batched, predict_proba_batched, EpochStats, TrainParams};
