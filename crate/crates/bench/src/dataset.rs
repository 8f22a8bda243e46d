//! Measurement synthesis and persistence: one IQ file per grid cell with a
//! JSON sidecar describing how it was produced.
//!
//! Files hold interleaved little-endian 32-bit float I,Q pairs, the common
//! SDR file-sink layout, so external captures can be replayed through the
//! same readers. The in-memory pipeline works in f64; only the files are
//! quantized.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use hideprint_core::channel::{measure_snr, propagate, ChannelConfig};
use hideprint_core::iq::IQFrame;
use hideprint_core::receiver::{receive, ReceiverConfig};
use hideprint_core::rfchain::{
    apply_fingerprint, counter_bits, inject_noise, make_fingerprint, modulate, pulse_shape,
    ModulationConfig, NoiseKind, NoiseSpec, PulseConfig,
};
use hideprint_core::seed::derive_rng;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::{subseed, seed_tags, DatasetConfig, ExperimentConfig, LinkChoice};
use crate::{runtime, validation, BenchError, Result};

/// Stable per-kind code used in seed derivation, independent of grid order.
fn kind_code(kind: NoiseKind) -> u64 {
    match kind {
        NoiseKind::None => 0,
        NoiseKind::Gaussian => 1,
        NoiseKind::Uniform => 2,
        NoiseKind::Laplacian => 3,
        NoiseKind::Impulse => 4,
    }
}

/// One grid cell: a device observed under one noise setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSpec {
    pub device: u32,
    pub kind: NoiseKind,
    pub sigma: f64,
}

/// Synthesized cell contents.
pub struct SynthCell {
    /// Symbol-rate IQ as seen by the classifier front end.
    pub symbols: Vec<Complex<f64>>,
    pub symbol_rate: f64,
    /// Measured SNR of the recording against the fingerprinted reference,
    /// covering both the injected noise and the receiver floor.
    pub snr_db: f64,
}

/// Expands the configured grid into the deterministic cell order: device
/// major, then sigma, then kind; sigma 0 collapses to one no-noise cell.
pub fn cell_grid(cfg: &DatasetConfig) -> Vec<CellSpec> {
    let mut cells = Vec::new();
    for device in 0..cfg.devices {
        for &sigma in &cfg.sigma_grid {
            if sigma == 0.0 {
                cells.push(CellSpec {
                    device,
                    kind: NoiseKind::None,
                    sigma,
                });
            } else {
                for &kind in &cfg.noise_kinds {
                    cells.push(CellSpec {
                        device,
                        kind,
                        sigma,
                    });
                }
            }
        }
    }
    cells
}

/// Every randomized stage of one cell draws from this stream.
pub fn cell_rng(dataset_seed: u64, spec: &CellSpec) -> rand_chacha::ChaCha8Rng {
    derive_rng(
        dataset_seed,
        &[u64::from(spec.device), kind_code(spec.kind), spec.sigma.to_bits()],
    )
}

fn add_awgn<R: Rng>(samples: &mut [Complex<f64>], snr_db: f64, rng: &mut R) {
    let p_sig: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
    let per_axis = (p_sig * 10f64.powf(-snr_db / 10.0) / 2.0).sqrt();
    for z in samples {
        let i: f64 = StandardNormal.sample(rng);
        let q: f64 = StandardNormal.sample(rng);
        *z += Complex::new(i * per_axis, q * per_axis);
    }
}

/// Produces a wired-link cell at symbol rate.
///
/// Over a cable the pulse-shaping cascade is transparent at the symbol
/// instants and the gain control undoes the attenuation, so the recording
/// is taken directly in the symbol domain: fingerprint, injected noise,
/// then the receiver noise floor.
pub fn synth_wired_cell(
    cfg: &DatasetConfig,
    strength: f64,
    spec: &CellSpec,
    dataset_seed: u64,
) -> Result<SynthCell> {
    let mut rng = cell_rng(dataset_seed, spec);
    let mod_cfg = ModulationConfig::default();
    let bits = counter_bits(cfg.samples_per_cell);
    let tx = modulate::<f64>(&bits, &mod_cfg).map_err(runtime)?;
    let fp = make_fingerprint(spec.device, cfg.calibration_seed, strength).map_err(runtime)?;
    let marked = apply_fingerprint(&tx, &fp, &mut rng).map_err(runtime)?;
    let injected =
        inject_noise(&marked, NoiseSpec::new(spec.kind, spec.sigma), &mut rng).map_err(runtime)?;

    let mut samples = injected.into_symbols();
    if let Some(snr) = cfg.awgn_snr_db {
        add_awgn(&mut samples, snr, &mut rng);
    }

    let rate = mod_cfg.symbol_rate;
    let received = IQFrame::new(samples.clone(), rate).map_err(runtime)?;
    let reference = IQFrame::new(marked.into_symbols(), rate).map_err(runtime)?;
    let snr_db = measure_snr(&received, &reference).map_err(runtime)?;
    Ok(SynthCell {
        symbols: samples,
        symbol_rate: rate,
        snr_db,
    })
}

/// Produces a wireless-link cell through the full waveform path: pulse
/// shaping, the fading channel, and carrier/timing recovery. The recording
/// is the receiver's symbol stream.
pub fn synth_wireless_cell(
    cfg: &DatasetConfig,
    strength: f64,
    spec: &CellSpec,
    dataset_seed: u64,
) -> Result<SynthCell> {
    let mut rng = cell_rng(dataset_seed, spec);
    let mod_cfg = ModulationConfig::default();
    let bits = counter_bits(cfg.samples_per_cell);
    let tx = modulate::<f64>(&bits, &mod_cfg).map_err(runtime)?;
    let fp = make_fingerprint(spec.device, cfg.calibration_seed, strength).map_err(runtime)?;
    let marked = apply_fingerprint(&tx, &fp, &mut rng).map_err(runtime)?;
    let injected =
        inject_noise(&marked, NoiseSpec::new(spec.kind, spec.sigma), &mut rng).map_err(runtime)?;
    let shaped = pulse_shape(&injected, &PulseConfig::default()).map_err(runtime)?;

    let channel = ChannelConfig::wireless(cfg.awgn_snr_db);
    let received = propagate(&shaped, &channel, &mut rng).map_err(runtime)?;
    let rx = receive(&received, &ReceiverConfig::default()).map_err(runtime)?;

    let rate = rx.symbols.symbol_rate();
    let snr_db = cfg.awgn_snr_db.unwrap_or(f64::INFINITY);
    Ok(SynthCell {
        symbols: rx.symbols.into_symbols(),
        symbol_rate: rate,
        snr_db,
    })
}

/// Dispatches on the configured link.
pub fn synth_cell(
    cfg: &DatasetConfig,
    strength: f64,
    spec: &CellSpec,
    dataset_seed: u64,
) -> Result<SynthCell> {
    match cfg.link {
        LinkChoice::Wired => synth_wired_cell(cfg, strength, spec, dataset_seed),
        LinkChoice::Wireless => synth_wireless_cell(cfg, strength, spec, dataset_seed),
    }
}

/// Writes interleaved little-endian f32 I,Q pairs.
pub fn write_iq_file(path: &Path, samples: &[Complex<f64>]) -> Result<()> {
    let f = fs::File::create(path).map_err(runtime)?;
    let mut w = BufWriter::new(f);
    for z in samples {
        w.write_all(&(z.re as f32).to_le_bytes()).map_err(runtime)?;
        w.write_all(&(z.im as f32).to_le_bytes()).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

/// Reads a file written by [`write_iq_file`].
pub fn read_iq_file(path: &Path) -> Result<Vec<Complex<f64>>> {
    let f = fs::File::open(path)
        .map_err(|e| validation(format!("cannot open {}: {e}", path.display())))?;
    let len = f
        .metadata()
        .map_err(runtime)?
        .len();
    if len % 8 != 0 {
        return Err(BenchError::Validation(format!(
            "{}: length {len} is not a whole number of I/Q pairs",
            path.display()
        )));
    }
    let mut r = BufReader::new(f);
    let mut out = Vec::with_capacity((len / 8) as usize);
    let mut buf = [0u8; 8];
    for _ in 0..len / 8 {
        r.read_exact(&mut buf).map_err(runtime)?;
        let i = f32::from_le_bytes(buf[0..4].try_into().unwrap());
        let q = f32::from_le_bytes(buf[4..8].try_into().unwrap());
        out.push(Complex::new(f64::from(i), f64::from(q)));
    }
    Ok(out)
}

/// Sidecar metadata describing one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    /// IQ file name, relative to the sidecar's directory.
    pub iq_file: String,
    pub device_id: u32,
    /// Lowercase noise family name; "none" for the shared clean cell.
    pub noise_kind: String,
    pub sigma: f64,
    pub link: String,
    pub sample_rate: f64,
    pub n_samples: u64,
    pub fingerprint_strength: f64,
    pub calibration_seed: u64,
    /// Dataset-level seed the cell streams were derived from.
    pub seed: u64,
    /// Measured SNR against the fingerprinted reference, if defined.
    pub snr_db: f64,
    /// Seconds since the Unix epoch at write time. Excluded from
    /// reproducibility comparisons.
    pub created_unix_s: u64,
}

impl MeasurementRecord {
    /// Checks the sidecar against the actual file.
    pub fn validate(&self, dir: &Path) -> Result<()> {
        let path = dir.join(&self.iq_file);
        let len = fs::metadata(&path)
            .map_err(|e| validation(format!("missing IQ file {}: {e}", path.display())))?
            .len();
        if len != self.n_samples * 8 {
            return Err(BenchError::Validation(format!(
                "{}: sidecar promises {} samples ({} bytes) but the file has {len} bytes",
                path.display(),
                self.n_samples,
                self.n_samples * 8
            )));
        }
        if !(self.sigma >= 0.0) || self.sample_rate <= 0.0 {
            return Err(BenchError::Validation(format!(
                "{}: sidecar fields out of range",
                path.display()
            )));
        }
        Ok(())
    }
}

fn sigma_index(grid: &[f64], sigma: f64) -> usize {
    grid.iter().position(|&s| s == sigma).unwrap_or(usize::MAX)
}

/// File stem for one cell, unique within a dataset directory.
pub fn cell_file_stem(grid: &[f64], spec: &CellSpec) -> String {
    format!(
        "dev{:02}_{}_s{:02}",
        spec.device,
        spec.kind.name(),
        sigma_index(grid, spec.sigma)
    )
}

/// Synthesizes every cell of the grid and persists it under `dir`.
///
/// Returns the records in the deterministic grid order. Repeated runs with
/// the same configuration and seed rewrite byte-identical IQ files; only
/// the sidecar timestamp differs.
pub fn generate_dataset(
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &Path,
    quiet: bool,
) -> Result<Vec<MeasurementRecord>> {
    fs::create_dir_all(dir).map_err(runtime)?;
    let dataset_seed = subseed(seed, seed_tags::DATASET);
    let cells = cell_grid(&cfg.dataset);
    let mut records = Vec::with_capacity(cells.len());
    for (i, spec) in cells.iter().enumerate() {
        let cell = synth_cell(&cfg.dataset, cfg.dataset.fingerprint_strength, spec, dataset_seed)?;
        let stem = cell_file_stem(&cfg.dataset.sigma_grid, spec);
        let iq_file = format!("{stem}.iq");
        write_iq_file(&dir.join(&iq_file), &cell.symbols)?;
        let record = MeasurementRecord {
            iq_file,
            device_id: spec.device,
            noise_kind: spec.kind.name().into(),
            sigma: spec.sigma,
            link: cfg.dataset.link.name().into(),
            sample_rate: cell.symbol_rate,
            n_samples: cell.symbols.len() as u64,
            fingerprint_strength: cfg.dataset.fingerprint_strength,
            calibration_seed: cfg.dataset.calibration_seed,
            seed: dataset_seed,
            snr_db: cell.snr_db,
            created_unix_s: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_err(runtime)?
                .as_secs(),
        };
        let sidecar = serde_json::to_string_pretty(&record).map_err(runtime)?;
        fs::write(dir.join(format!("{stem}.json")), sidecar).map_err(runtime)?;
        if !quiet && (i + 1) % 25 == 0 {
            eprintln!("generated {}/{} cells", i + 1, cells.len());
        }
        records.push(record);
    }
    Ok(records)
}

/// Loads and validates every sidecar under `dir`, sorted by file name.
pub fn load_dataset(dir: &Path) -> Result<Vec<MeasurementRecord>> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| validation(format!("cannot read dataset dir {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(BenchError::Validation(format!(
            "no sidecars found in {}",
            dir.display()
        )));
    }
    let mut records = Vec::with_capacity(names.len());
    for p in names {
        let text = fs::read_to_string(&p).map_err(runtime)?;
        let record: MeasurementRecord = serde_json::from_str(&text)
            .map_err(|e| validation(format!("bad sidecar {}: {e}", p.display())))?;
        record.validate(dir)?;
        records.push(record);
    }
    Ok(records)
}
