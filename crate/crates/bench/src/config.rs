//! Run configuration: a TOML file with nested sections, schema-checked on
//! load, echoed verbatim into every output directory.

use std::path::{Path, PathBuf};

use hideprint_core::channel::ChannelConfig;
use hideprint_core::imaging::ImagingConfig;
use hideprint_core::learn::{AutoencoderConfig, ClassifierConfig, RawIqConfig};
use hideprint_core::rfchain::NoiseKind;
use hideprint_core::seed::derive_seed_bytes;
use serde::{Deserialize, Serialize};

use crate::{validation, BenchError, Result};

/// Role tags that split the top-level seed into independent streams.
pub mod seed_tags {
    pub const DATASET: u64 = 0x4441_5441;
    pub const CLASSIFIER: u64 = 0x434c_4153;
    pub const AUTOENCODER: u64 = 0x4145_4e43;
    pub const RAWIQ: u64 = 0x5241_5749;
    pub const SPLIT: u64 = 0x5350_4c54;
    pub const DISCLOSURE: u64 = 0x4449_5343;
    pub const MONTE_CARLO: u64 = 0x4d43_5653;
}

/// Derives a named sub-seed from the run seed.
pub fn subseed(seed: u64, tag: u64) -> u64 {
    u64::from_le_bytes(derive_seed_bytes(seed, &[tag])[..8].try_into().unwrap())
}

/// Which link model the dataset simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkChoice {
    Wired,
    Wireless,
}

impl LinkChoice {
    pub fn name(self) -> &'static str {
        match self {
            LinkChoice::Wired => "wired",
            LinkChoice::Wireless => "wireless",
        }
    }
}

/// Measurement grid: which devices, noise settings, and link to record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Number of simulated transmitters.
    pub devices: u32,
    /// IQ samples recorded per (device, kind, sigma) cell.
    pub samples_per_cell: usize,
    /// Noise standard deviations, strictly increasing; 0 means no injection.
    pub sigma_grid: Vec<f64>,
    /// Injected families; sigma 0 collapses to a single shared cell.
    pub noise_kinds: Vec<NoiseKind>,
    pub link: LinkChoice,
    /// Receiver-side AWGN level; `None` disables the floor.
    pub awgn_snr_db: Option<f64>,
    /// RMS constellation displacement of the device fingerprints.
    pub fingerprint_strength: f64,
    /// Seed of the fingerprint calibration bench, shared by all devices.
    pub calibration_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            devices: 10,
            samples_per_cell: 2_000_000,
            sigma_grid: vec![0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
            noise_kinds: NoiseKind::all().to_vec(),
            link: LinkChoice::Wired,
            awgn_snr_db: Some(50.0),
            fingerprint_strength: 0.005,
            calibration_seed: 0xca11b,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.devices < 2 {
            return Err(BenchError::Validation(
                "dataset.devices must be at least 2".into(),
            ));
        }
        if self.samples_per_cell == 0 {
            return Err(BenchError::Validation(
                "dataset.samples_per_cell must be positive".into(),
            ));
        }
        check_sigma_grid("dataset.sigma_grid", &self.sigma_grid)?;
        if self.noise_kinds.is_empty() {
            return Err(BenchError::Validation(
                "dataset.noise_kinds must not be empty".into(),
            ));
        }
        if self.noise_kinds.contains(&NoiseKind::None) {
            return Err(BenchError::Validation(
                "dataset.noise_kinds lists injectable kinds; drop \"none\" and use sigma 0 instead".into(),
            ));
        }
        let mut seen = Vec::new();
        for k in &self.noise_kinds {
            if seen.contains(k) {
                return Err(BenchError::Validation(
                    "dataset.noise_kinds must not repeat a kind".into(),
                ));
            }
            seen.push(*k);
        }
        if let Some(snr) = self.awgn_snr_db {
            if !snr.is_finite() {
                return Err(BenchError::Validation(
                    "dataset.awgn_snr_db must be finite".into(),
                ));
            }
        }
        if !(self.fingerprint_strength >= 0.0 && self.fingerprint_strength < 0.3) {
            return Err(BenchError::Validation(
                "dataset.fingerprint_strength must be in [0, 0.3)".into(),
            ));
        }
        Ok(())
    }

    /// Channel model matching the configured link.
    pub fn channel(&self) -> ChannelConfig {
        match self.link {
            LinkChoice::Wired => ChannelConfig::wired(self.awgn_snr_db),
            LinkChoice::Wireless => ChannelConfig::wireless(self.awgn_snr_db),
        }
    }
}

/// Disclosure protocol scenario plus the voting analytics grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Shared secret that drives the per-slot level schedule.
    pub secret: String,
    /// Number of schedule levels; `sigma_grid` maps each level to a sigma.
    pub n_levels: usize,
    /// Per-level noise deviations, strictly increasing from level 0.
    pub sigma_grid: Vec<f64>,
    /// Fingerprint strength used for the disclosure scenario.
    pub fingerprint_strength: f64,
    /// IQ samples per (device, level) training cell.
    pub samples_per_cell: usize,
    pub n_slots: u64,
    /// Independent observations aggregated by majority within one slot.
    pub votes_per_slot: u64,
    /// Per-observation accuracies tabulated by the voting analytics.
    pub psucc_p: Vec<f64>,
    /// Window lengths tabulated by the voting analytics.
    pub psucc_w: Vec<u64>,
    /// Monte-Carlo iterations backing each analytic table entry.
    pub mc_iters: u64,
    /// Secret holder's per-observation accuracy in the success curves.
    pub psucc_base_p: f64,
    /// Outsider accuracy handicaps tabulated by the success curves.
    pub psucc_deltas: Vec<f64>,
    /// Longest vote window in the success curves.
    pub psucc_w_max: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            secret: "hideprint-demo-secret".into(),
            n_levels: 6,
            sigma_grid: vec![0.0, 0.016, 0.018, 0.021, 0.024, 0.027],
            fingerprint_strength: 0.025,
            samples_per_cell: 5_000_000,
            n_slots: 600,
            votes_per_slot: 1,
            psucc_p: vec![0.6, 0.8, 0.96],
            psucc_w: vec![1, 3, 6, 15],
            mc_iters: 200_000,
            psucc_base_p: 0.96,
            psucc_deltas: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            psucc_w_max: 15,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.secret.is_empty() {
            return Err(BenchError::Validation(
                "protocol.secret must not be empty".into(),
            ));
        }
        if self.n_levels < 2 {
            return Err(BenchError::Validation(
                "protocol.n_levels must be at least 2".into(),
            ));
        }
        if self.sigma_grid.len() != self.n_levels {
            return Err(BenchError::Validation(format!(
                "protocol.sigma_grid has {} entries for {} levels",
                self.sigma_grid.len(),
                self.n_levels
            )));
        }
        check_sigma_grid("protocol.sigma_grid", &self.sigma_grid)?;
        if !(self.fingerprint_strength >= 0.0 && self.fingerprint_strength < 0.3) {
            return Err(BenchError::Validation(
                "protocol.fingerprint_strength must be in [0, 0.3)".into(),
            ));
        }
        if self.samples_per_cell == 0 || self.n_slots == 0 || self.votes_per_slot == 0 {
            return Err(BenchError::Validation(
                "protocol sizes must be positive".into(),
            ));
        }
        if self.psucc_p.is_empty() || self.psucc_w.is_empty() {
            return Err(BenchError::Validation(
                "protocol.psucc_p and protocol.psucc_w must not be empty".into(),
            ));
        }
        if self.psucc_p.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BenchError::Validation(
                "protocol.psucc_p entries must lie in [0, 1]".into(),
            ));
        }
        if self.psucc_w.contains(&0) {
            return Err(BenchError::Validation(
                "protocol.psucc_w entries must be positive".into(),
            ));
        }
        if self.mc_iters == 0 {
            return Err(BenchError::Validation(
                "protocol.mc_iters must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.psucc_base_p) {
            return Err(BenchError::Validation(
                "protocol.psucc_base_p must lie in [0, 1]".into(),
            ));
        }
        let max_delta = self.psucc_deltas.iter().copied().fold(0.0, f64::max);
        if self.psucc_deltas.iter().any(|d| *d < 0.0) || self.psucc_base_p < max_delta {
            return Err(BenchError::Validation(
                "protocol.psucc_deltas must lie in [0, psucc_base_p]".into(),
            ));
        }
        if self.psucc_w_max == 0 {
            return Err(BenchError::Validation(
                "protocol.psucc_w_max must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn check_sigma_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(BenchError::Validation(format!("{name} must not be empty")));
    }
    for s in grid {
        if !(s.is_finite() && *s >= 0.0) {
            return Err(BenchError::Validation(format!(
                "{name} entries must be finite and non-negative"
            )));
        }
    }
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(BenchError::Validation(format!(
                "{name} must be strictly increasing"
            )));
        }
    }
    Ok(())
}

/// The whole run: grid, imaging, model, and protocol settings plus the
/// top-level seed every random stream is derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Run seed; the HIDEPRINT_SEED environment variable and the --seed
    /// flag override it, flag first. Model seeds are derived from it, so
    /// any seed values inside the model sections are ignored.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub imaging: ImagingConfig,
    pub classifier: ClassifierConfig,
    pub autoencoder: AutoencoderConfig,
    pub rawiq: RawIqConfig,
    pub protocol: ProtocolConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            output_dir: PathBuf::from("out"),
            dataset: DatasetConfig::default(),
            imaging: ImagingConfig::default(),
            classifier: ClassifierConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            rawiq: RawIqConfig::default(),
            protocol: ProtocolConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| validation(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self = toml::from_str(&text)
            .map_err(|e| validation(format!("bad config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every section and the cross-section consistency rules.
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.protocol.validate()?;
        self.imaging.validate().map_err(validation)?;
        self.classifier.validate().map_err(validation)?;
        self.autoencoder.validate().map_err(validation)?;
        self.rawiq.validate().map_err(validation)?;

        let side = self.imaging.image_size;
        if self.classifier.input_side != side {
            return Err(BenchError::Validation(format!(
                "classifier.input_side {} must equal imaging.image_size {side}",
                self.classifier.input_side
            )));
        }
        if self.autoencoder.input_dim != side * side {
            return Err(BenchError::Validation(format!(
                "autoencoder.input_dim {} must equal image_size^2 = {}",
                self.autoencoder.input_dim,
                side * side
            )));
        }
        let n = self.dataset.devices as usize;
        if self.classifier.num_classes != n || self.rawiq.num_classes != n {
            return Err(BenchError::Validation(format!(
                "classifier.num_classes and rawiq.num_classes must equal dataset.devices = {n}"
            )));
        }
        if self.dataset.samples_per_cell < self.imaging.chunk_symbols {
            return Err(BenchError::Validation(
                "dataset.samples_per_cell must cover at least one imaging chunk".into(),
            ));
        }
        if self.protocol.samples_per_cell < self.imaging.chunk_symbols {
            return Err(BenchError::Validation(
                "protocol.samples_per_cell must cover at least one imaging chunk".into(),
            ));
        }
        if self.dataset.samples_per_cell < self.rawiq.window {
            return Err(BenchError::Validation(
                "dataset.samples_per_cell must cover at least one raw IQ window".into(),
            ));
        }
        Ok(())
    }

    /// Serializes the resolved configuration for the output echo.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(crate::runtime)
    }

    /// Classifier settings with the seed fixed by the run seed.
    pub fn classifier_for_run(&self, seed: u64, tag: u64) -> ClassifierConfig {
        let mut c = self.classifier.clone();
        c.seed = subseed(seed, tag);
        c
    }

    /// Autoencoder settings with the seed fixed by the run seed.
    pub fn autoencoder_for_run(&self, seed: u64, tag: u64) -> AutoencoderConfig {
        let mut c = self.autoencoder.clone();
        c.seed = subseed(seed, tag);
        c
    }

    /// Raw-IQ settings with the seed fixed by the run seed.
    pub fn rawiq_for_run(&self, seed: u64, tag: u64) -> RawIqConfig {
        let mut c = self.rawiq.clone();
        c.seed = subseed(seed, tag);
        c
    }
}

/// Applies the seed precedence: explicit flag, then environment, then file.
pub fn resolve_seed(flag: Option<u64>, cfg_seed: u64) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("HIDEPRINT_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| validation(format!("HIDEPRINT_SEED is not a u64: {v:?}"))),
        Err(std::env::VarError::NotPresent) => Ok(cfg_seed),
        Err(e) => Err(validation(format!("HIDEPRINT_SEED unreadable: {e}"))),
    }
}
