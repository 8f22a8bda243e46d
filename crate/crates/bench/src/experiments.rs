//! Experiment runners: build measurement grids in memory, train the
//! models, and emit one CSV per study plus a JSON summary.
//!
//! Every runner is a thin composition of public pieces (bank building,
//! splitting, training, evaluation), so tests can drive the same machinery
//! at whatever granularity they need. All randomness is derived from the
//! run seed; reruns produce byte-identical tables.

use std::path::Path;
use std::time::Instant;

use hideprint_core::imaging::{image_to_unit_vec, images_from_symbols};
use hideprint_core::learn::{
    auc, best_operating_point, gradient_check_autoencoder, gradient_check_classifier,
    gradient_check_rawiq, roc_curve, split_stratified, train_autoencoder, train_classifier,
    train_rawiq_classifier, windows_to_rows, AutoencoderConfig, ClassifierConfig, ConvStage,
    Dataset, GradCheckReport, RawIqConfig, TrainedClassifier,
};
use hideprint_core::protocol::{
    majority_success_prob, mc_vote_success, psucc_curves, simulate_disclosure, DisclosureConfig,
    DisclosureReport, ModelBank, PsuccCurve,
};
use hideprint_core::rfchain::NoiseKind;
use ndarray::Array2;
use serde::Serialize;

use crate::config::{seed_tags, subseed, ExperimentConfig, LinkChoice};
use crate::dataset::{cell_grid, synth_cell, CellSpec};
use crate::report::{csv_cell, write_csv, write_summary, ExperimentSummary};
use crate::{runtime, BenchError, Result};

/// All images rendered from one measurement cell.
pub struct CellImages {
    pub device: u32,
    pub kind: NoiseKind,
    pub sigma: f64,
    pub snr_db: f64,
    /// One row per image: row-major pixels scaled to `[0, 1]`.
    pub rows: Vec<Vec<f64>>,
}

/// The rendered measurement grid.
pub struct ImageBank {
    pub cells: Vec<CellImages>,
    pub devices: usize,
    pub feature_len: usize,
}

impl ImageBank {
    /// Cells without injected noise.
    pub fn clean_cells(&self) -> impl Iterator<Item = &CellImages> {
        self.cells.iter().filter(|c| c.kind == NoiseKind::None)
    }

    /// Cells matching a noise setting.
    pub fn cells_at(&self, kind: NoiseKind, sigma: f64) -> impl Iterator<Item = &CellImages> + '_ {
        self.cells
            .iter()
            .filter(move |c| c.kind == kind && c.sigma == sigma)
    }

    /// Stacks a set of cells into a labeled dataset.
    pub fn dataset_of<'a>(&self, cells: impl Iterator<Item = &'a CellImages>) -> Result<Dataset> {
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        let mut n = 0usize;
        for cell in cells {
            for row in &cell.rows {
                flat.extend_from_slice(row);
                labels.push(cell.device as usize);
                n += 1;
            }
        }
        let x = Array2::from_shape_vec((n, self.feature_len), flat).map_err(runtime)?;
        Dataset::new(x, labels, self.devices).map_err(runtime)
    }
}

/// Renders every grid cell that passes `keep`. Cells are synthesized one
/// at a time so only the images stay resident.
pub fn build_image_bank(
    cfg: &ExperimentConfig,
    seed: u64,
    keep: impl Fn(&CellSpec) -> bool,
    quiet: bool,
) -> Result<ImageBank> {
    let dataset_seed = subseed(seed, seed_tags::DATASET);
    let specs: Vec<CellSpec> = cell_grid(&cfg.dataset).into_iter().filter(|s| keep(s)).collect();
    if specs.is_empty() {
        return Err(BenchError::Validation(
            "image bank filter excluded every cell".into(),
        ));
    }
    let mut cells = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let cell = synth_cell(&cfg.dataset, cfg.dataset.fingerprint_strength, spec, dataset_seed)?;
        let images = images_from_symbols(&cell.symbols, &cfg.imaging).map_err(runtime)?;
        cells.push(CellImages {
            device: spec.device,
            kind: spec.kind,
            sigma: spec.sigma,
            snr_db: cell.snr_db,
            rows: images.iter().map(image_to_unit_vec).collect(),
        });
        if !quiet && (i + 1) % 25 == 0 {
            eprintln!("rendered {}/{} cells", i + 1, specs.len());
        }
    }
    let side = cfg.imaging.image_size;
    Ok(ImageBank {
        cells,
        devices: cfg.dataset.devices as usize,
        feature_len: side * side,
    })
}

/// Splits 60/20/20 into train, validation, and test.
pub fn split3(ds: &Dataset, split_seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let (rest, test) = split_stratified(ds, 0.2, subseed(split_seed, 1)).map_err(runtime)?;
    let (train, val) = split_stratified(&rest, 0.25, subseed(split_seed, 2)).map_err(runtime)?;
    Ok((train, val, test))
}

/// One row of an accuracy table.
#[derive(Debug, Clone, Serialize)]
pub struct SigmaRow {
    pub kind: String,
    pub sigma: f64,
    pub accuracy: f64,
    pub snr_db: f64,
}

/// Outcome of the train-clean, test-everywhere study.
pub struct AccuracyStudy {
    /// Accuracy of the clean-trained model per cell group, clean row first.
    pub rows: Vec<SigmaRow>,
    pub model: TrainedClassifier,
    /// Held-out accuracy on the clean cells.
    pub clean_test_accuracy: f64,
    /// Seconds spent on rendering the clean cells, training, and the
    /// held-out evaluation.
    pub baseline_seconds: f64,
}

fn eval_on(model: &mut TrainedClassifier, ds: &Dataset) -> Result<f64> {
    model.accuracy(ds).map_err(runtime)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Trains on the noise-free cells and sweeps every injected setting.
///
/// The clean accuracy comes from a held-out split; injected cells were
/// never seen in training, so their full image sets are scored.
pub fn accuracy_study(cfg: &ExperimentConfig, seed: u64, quiet: bool) -> Result<AccuracyStudy> {
    let t0 = Instant::now();
    let clean_bank = build_image_bank(cfg, seed, |s| s.kind == NoiseKind::None, quiet)?;
    let clean = clean_bank.dataset_of(clean_bank.clean_cells())?;
    let (train, val, test) = split3(&clean, subseed(seed, seed_tags::SPLIT))?;
    let cls_cfg = cfg.classifier_for_run(seed, seed_tags::CLASSIFIER);
    if !quiet {
        eprintln!(
            "training the baseline classifier on {} clean images",
            train.len()
        );
    }
    let mut model = train_classifier(&cls_cfg, &train, &val).map_err(runtime)?;
    let clean_test_accuracy = eval_on(&mut model, &test)?;
    let baseline_seconds = t0.elapsed().as_secs_f64();

    let clean_snr = mean(clean_bank.clean_cells().map(|c| c.snr_db));
    let mut rows = vec![SigmaRow {
        kind: NoiseKind::None.name().into(),
        sigma: 0.0,
        accuracy: clean_test_accuracy,
        snr_db: clean_snr,
    }];

    for &sigma in cfg.dataset.sigma_grid.iter().filter(|&&s| s > 0.0) {
        for &kind in &cfg.dataset.noise_kinds {
            let bank = build_image_bank(cfg, seed, |s| s.kind == kind && s.sigma == sigma, true)?;
            let ds = bank.dataset_of(bank.cells.iter())?;
            let accuracy = eval_on(&mut model, &ds)?;
            rows.push(SigmaRow {
                kind: kind.name().into(),
                sigma,
                accuracy,
                snr_db: mean(bank.cells.iter().map(|c| c.snr_db)),
            });
            if !quiet {
                eprintln!("{} sigma {sigma}: accuracy {accuracy:.3}", kind.name());
            }
        }
    }
    Ok(AccuracyStudy {
        rows,
        model,
        clean_test_accuracy,
        baseline_seconds,
    })
}

/// Outcome of the pooled-training study: one model fed every noise level
/// of one kind, scored per setting.
pub struct PooledStudy {
    pub rows: Vec<SigmaRow>,
}

/// Trains one model on clean plus every sigma of `pool_kind` and scores it
/// per setting. Pooled cells are scored on their held-out splits; other
/// kinds on their full image sets.
pub fn pooled_study(
    cfg: &ExperimentConfig,
    seed: u64,
    pool_kind: NoiseKind,
    quiet: bool,
) -> Result<PooledStudy> {
    let bank = build_image_bank(
        cfg,
        seed,
        |s| s.kind == NoiseKind::None || s.kind == pool_kind,
        quiet,
    )?;
    let split_seed = subseed(seed, seed_tags::SPLIT);

    // Per-cell-group splits, pooled for training.
    let mut groups = Vec::new();
    for (gi, &sigma) in cfg.dataset.sigma_grid.iter().enumerate() {
        let kind = if sigma == 0.0 { NoiseKind::None } else { pool_kind };
        let ds = bank.dataset_of(bank.cells_at(kind, sigma))?;
        let parts = split3(&ds, subseed(split_seed, 10 + gi as u64))?;
        groups.push((kind, sigma, parts));
    }
    let train = concat_datasets(groups.iter().map(|(_, _, (t, _, _))| t), bank.devices)?;
    let val = concat_datasets(groups.iter().map(|(_, _, (_, v, _))| v), bank.devices)?;

    let mut cls_cfg = cfg.classifier_for_run(seed, seed_tags::CLASSIFIER);
    cls_cfg.seed = subseed(cls_cfg.seed, 0xa11);
    if !quiet {
        eprintln!("training the pooled classifier on {} images", train.len());
    }
    let mut model = train_classifier(&cls_cfg, &train, &val).map_err(runtime)?;

    let mut rows = Vec::new();
    for (kind, sigma, (_, _, test)) in &groups {
        rows.push(SigmaRow {
            kind: kind.name().into(),
            sigma: *sigma,
            accuracy: eval_on(&mut model, test)?,
            snr_db: mean(bank.cells_at(*kind, *sigma).map(|c| c.snr_db)),
        });
    }
    for &sigma in cfg.dataset.sigma_grid.iter().filter(|&&s| s > 0.0) {
        for &kind in cfg.dataset.noise_kinds.iter().filter(|&&k| k != pool_kind) {
            let other = build_image_bank(cfg, seed, |s| s.kind == kind && s.sigma == sigma, true)?;
            let ds = other.dataset_of(other.cells.iter())?;
            rows.push(SigmaRow {
                kind: kind.name().into(),
                sigma,
                accuracy: eval_on(&mut model, &ds)?,
                snr_db: mean(other.cells.iter().map(|c| c.snr_db)),
            });
        }
    }
    Ok(PooledStudy { rows })
}

fn concat_datasets<'a>(
    parts: impl Iterator<Item = &'a Dataset>,
    n_classes: usize,
) -> Result<Dataset> {
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    let mut width = 0usize;
    for ds in parts {
        width = ds.x.ncols();
        for row in ds.x.rows() {
            flat.extend(row.iter().copied());
            n += 1;
        }
        labels.extend_from_slice(&ds.y);
    }
    let x = Array2::from_shape_vec((n, width), flat).map_err(runtime)?;
    Dataset::new(x, labels, n_classes).map_err(runtime)
}

/// Per-device one-class results.
#[derive(Debug, Clone, Serialize)]
pub struct DeviceAeRow {
    pub device: u32,
    /// Mean reconstruction error on the validation images.
    pub mean_val_mse: f64,
    /// Acceptance threshold fitted on the validation errors.
    pub tau: f64,
    /// Share of held-out same-device images rejected.
    pub fpr: f64,
    pub n_test: usize,
}

/// Outcome of the one-class study.
pub struct AutoencoderStudy {
    pub rows: Vec<DeviceAeRow>,
    /// Rejected share pooled over all devices' held-out images.
    pub pooled_fpr: f64,
    /// Detector quality when each device's model scores everyone's images.
    pub roc: Vec<(f64, f64, f64)>,
    pub auc: f64,
    pub best_threshold: f64,
}

/// Trains one autoencoder per device on its clean images and measures the
/// false rejection rate plus the cross-device separability.
pub fn autoencoder_study(
    cfg: &ExperimentConfig,
    seed: u64,
    bank: &ImageBank,
    quiet: bool,
) -> Result<AutoencoderStudy> {
    let split_seed = subseed(seed, seed_tags::SPLIT);
    let base_ae = cfg.autoencoder_for_run(seed, seed_tags::AUTOENCODER);

    let mut rows = Vec::new();
    let mut rejected = 0usize;
    let mut held_out = 0usize;
    // Cross-device scores: higher means more same-device-like.
    let mut scores = Vec::new();
    let mut positives = Vec::new();

    let mut device_tests: Vec<(u32, Array2<f64>)> = Vec::new();
    let mut models = Vec::new();
    for cell in bank.clean_cells() {
        let ds = bank.dataset_of(std::iter::once(cell))?;
        let single = Dataset::new(ds.x.clone(), vec![0; ds.len()], 1).map_err(runtime)?;
        let (train, val, test) = split3(&single, subseed(split_seed, 100 + u64::from(cell.device)))?;
        let mut ae_cfg = base_ae.clone();
        ae_cfg.seed = subseed(ae_cfg.seed, u64::from(cell.device));
        let mut trained = train_autoencoder(&ae_cfg, &train.x, &val.x).map_err(runtime)?;

        let mean_val_mse = mean(trained.val_mse.iter().copied());
        let decisions = trained.decide(&test.x).map_err(runtime)?;
        let n_test = decisions.len();
        let n_rejected = decisions.iter().filter(|(ok, _)| !ok).count();
        rejected += n_rejected;
        held_out += n_test;
        rows.push(DeviceAeRow {
            device: cell.device,
            mean_val_mse,
            tau: trained.threshold.tau,
            fpr: n_rejected as f64 / n_test.max(1) as f64,
            n_test,
        });
        if !quiet {
            eprintln!(
                "device {}: tau {:.3e}, {}/{} held-out images rejected",
                cell.device, trained.threshold.tau, n_rejected, n_test
            );
        }
        device_tests.push((cell.device, test.x));
        models.push((cell.device, trained));
    }

    for (owner, model) in &mut models {
        for (device, x) in &device_tests {
            for mse in model.model.mse_per_row(x).map_err(runtime)? {
                scores.push(-mse);
                positives.push(device == owner);
            }
        }
    }
    let points = roc_curve(&scores, &positives).map_err(runtime)?;
    let auc_value = auc(&points);
    let best = best_operating_point(&points)
        .ok_or_else(|| BenchError::Runtime("empty ROC curve".into()))?;

    Ok(AutoencoderStudy {
        rows,
        pooled_fpr: rejected as f64 / held_out.max(1) as f64,
        roc: points.iter().map(|p| (p.threshold, p.fpr, p.tpr)).collect(),
        auc: auc_value,
        best_threshold: best.threshold,
    })
}

/// Outcome of the raw-sample study.
pub struct RawIqStudy {
    /// (sigma, accuracy) of the clean-trained window classifier.
    pub rows: Vec<(f64, f64)>,
    pub clean_test_accuracy: f64,
}

fn rawiq_windows(
    cfg: &ExperimentConfig,
    seed: u64,
    kind: NoiseKind,
    sigma: f64,
) -> Result<Dataset> {
    let dataset_seed = subseed(seed, seed_tags::DATASET);
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    let mut n = 0usize;
    let window = cfg.rawiq.window;
    for device in 0..cfg.dataset.devices {
        let spec = CellSpec {
            device,
            kind,
            sigma,
        };
        let cell = synth_cell(&cfg.dataset, cfg.dataset.fingerprint_strength, &spec, dataset_seed)?;
        let rows = windows_to_rows(&cell.symbols, window).map_err(runtime)?;
        for row in rows.rows() {
            flat.extend(row.iter().copied());
            labels.push(device as usize);
            n += 1;
        }
    }
    let x = Array2::from_shape_vec((n, 2 * window), flat).map_err(runtime)?;
    Dataset::new(x, labels, cfg.dataset.devices as usize).map_err(runtime)
}

/// Trains the window classifier on clean captures and scores it per sigma
/// on Gaussian-injected captures.
pub fn rawiq_study(
    cfg: &ExperimentConfig,
    seed: u64,
    sigmas: &[f64],
    quiet: bool,
) -> Result<RawIqStudy> {
    let clean = rawiq_windows(cfg, seed, NoiseKind::None, 0.0)?;
    let (train, val, test) = split3(&clean, subseed(seed, seed_tags::SPLIT ^ 0x5249))?;
    let riq_cfg = cfg.rawiq_for_run(seed, seed_tags::RAWIQ);
    if !quiet {
        eprintln!("training the raw-sample classifier on {} windows", train.len());
    }
    let mut model = train_rawiq_classifier(&riq_cfg, &train, &val).map_err(runtime)?;
    let clean_test_accuracy = model.accuracy(&test).map_err(runtime)?;

    let mut rows = vec![(0.0, clean_test_accuracy)];
    for &sigma in sigmas.iter().filter(|&&s| s > 0.0) {
        let ds = rawiq_windows(cfg, seed, NoiseKind::Gaussian, sigma)?;
        let accuracy = model.accuracy(&ds).map_err(runtime)?;
        if !quiet {
            eprintln!("raw windows at sigma {sigma}: accuracy {accuracy:.3}");
        }
        rows.push((sigma, accuracy));
    }
    Ok(RawIqStudy {
        rows,
        clean_test_accuracy,
    })
}

/// Accuracy tables behind a disclosure run.
#[derive(Debug, Clone, Serialize)]
pub struct LevelAccuracy {
    pub level: usize,
    pub sigma: f64,
    /// Test accuracy of the model trained on exactly this level.
    pub matched: f64,
    /// Test accuracy at this level of one model trained on all levels.
    pub pooled: f64,
}

/// Builds the per-level accuracy bank for the disclosure simulation.
///
/// The secret holder picks the model matched to each slot's level; the
/// outsider, blind to the schedule, uses one model trained on a pool of
/// every level.
pub fn disclosure_bank(
    cfg: &ExperimentConfig,
    seed: u64,
    quiet: bool,
) -> Result<(ModelBank, Vec<LevelAccuracy>)> {
    let mut proto_cfg = cfg.clone();
    proto_cfg.dataset.sigma_grid = cfg.protocol.sigma_grid.clone();
    proto_cfg.dataset.noise_kinds = vec![NoiseKind::Gaussian];
    proto_cfg.dataset.fingerprint_strength = cfg.protocol.fingerprint_strength;
    proto_cfg.dataset.samples_per_cell = cfg.protocol.samples_per_cell;
    proto_cfg.validate()?;
    let proto_seed = subseed(seed, seed_tags::DISCLOSURE);

    let bank = build_image_bank(&proto_cfg, proto_seed, |_| true, quiet)?;
    let split_seed = subseed(proto_seed, seed_tags::SPLIT);
    let base_cls = proto_cfg.classifier_for_run(proto_seed, seed_tags::CLASSIFIER);

    let mut level_parts = Vec::new();
    for (level, &sigma) in cfg.protocol.sigma_grid.iter().enumerate() {
        let kind = if sigma == 0.0 { NoiseKind::None } else { NoiseKind::Gaussian };
        let ds = bank.dataset_of(bank.cells_at(kind, sigma))?;
        level_parts.push(split3(&ds, subseed(split_seed, 200 + level as u64))?);
    }

    let mut legit = Vec::new();
    for (level, (train, val, test)) in level_parts.iter().enumerate() {
        let mut c = base_cls.clone();
        c.seed = subseed(c.seed, 300 + level as u64);
        if !quiet {
            eprintln!("training the matched model for level {level}");
        }
        let mut model = train_classifier(&c, train, val).map_err(runtime)?;
        legit.push(eval_on(&mut model, test)?);
    }

    let train = concat_datasets(level_parts.iter().map(|(t, _, _)| t), bank.devices)?;
    let val = concat_datasets(level_parts.iter().map(|(_, v, _)| v), bank.devices)?;
    let mut c = base_cls.clone();
    c.seed = subseed(c.seed, 400);
    if !quiet {
        eprintln!("training the pooled outsider model on {} images", train.len());
    }
    let mut pooled_model = train_classifier(&c, &train, &val).map_err(runtime)?;
    let mut pooled = Vec::new();
    for (_, _, test) in &level_parts {
        pooled.push(eval_on(&mut pooled_model, test)?);
    }

    let levels = cfg
        .protocol
        .sigma_grid
        .iter()
        .enumerate()
        .map(|(level, &sigma)| LevelAccuracy {
            level,
            sigma,
            matched: legit[level],
            pooled: pooled[level],
        })
        .collect();
    Ok((
        ModelBank {
            legit_accuracy: legit,
            adversary_accuracy: pooled,
        },
        levels,
    ))
}

/// Runs the slotted disclosure simulation against a prepared bank.
pub fn disclosure_sim(
    cfg: &ExperimentConfig,
    seed: u64,
    bank: &ModelBank,
) -> Result<DisclosureReport> {
    let sim_cfg = DisclosureConfig {
        secret: cfg.protocol.secret.clone().into_bytes(),
        n_slots: cfg.protocol.n_slots,
        votes_per_slot: cfg.protocol.votes_per_slot,
        n_levels: cfg.protocol.n_levels,
        n_classes: cfg.dataset.devices as usize,
    };
    simulate_disclosure(&sim_cfg, bank, subseed(seed, seed_tags::DISCLOSURE ^ 0x51))
        .map_err(runtime)
}

/// Writes the slot table for a disclosure run.
pub fn write_disclosure_csv(path: &Path, report: &DisclosureReport) -> Result<()> {
    let rows: Vec<Vec<String>> = report
        .outcomes
        .iter()
        .map(|o| {
            vec![
                o.slot.to_string(),
                o.true_device.to_string(),
                o.level.to_string(),
                o.legit_vote.to_string(),
                o.adversary_vote.to_string(),
            ]
        })
        .collect();
    write_csv(
        path,
        &["slot", "true_device", "level", "legit_vote", "adversary_vote"],
        &rows,
    )
}

/// One row of the majority-voting table.
#[derive(Debug, Clone, Serialize)]
pub struct PsuccRow {
    pub w: u64,
    pub p: f64,
    pub analytic: f64,
    pub monte_carlo: f64,
}

/// Tabulates the analytic majority-vote success odds next to a Monte-Carlo
/// estimate for each configured (window, accuracy) pair.
pub fn psucc_table(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<PsuccRow>> {
    let mc_seed = subseed(seed, seed_tags::MONTE_CARLO);
    let mut rows = Vec::new();
    for (wi, &w) in cfg.protocol.psucc_w.iter().enumerate() {
        for (pi, &p) in cfg.protocol.psucc_p.iter().enumerate() {
            let analytic = majority_success_prob(w, p).map_err(runtime)?;
            let mc = mc_vote_success(
                w,
                p,
                cfg.protocol.mc_iters,
                subseed(mc_seed, (wi as u64) << 16 | pi as u64),
            )
            .map_err(runtime)?;
            rows.push(PsuccRow {
                w,
                p,
                analytic,
                monte_carlo: mc,
            });
        }
    }
    Ok(rows)
}

/// Success-vs-votes curves for the secret holder and handicapped voters.
pub fn psucc_curve_table(cfg: &ExperimentConfig) -> Result<Vec<PsuccCurve>> {
    psucc_curves(
        cfg.protocol.psucc_base_p,
        &cfg.protocol.psucc_deltas,
        cfg.protocol.psucc_w_max,
    )
    .map_err(runtime)
}

fn psucc_curves_csv(path: &Path, curves: &[PsuccCurve]) -> Result<()> {
    let mut table = Vec::new();
    for c in curves {
        for (i, &p) in c.p_succ.iter().enumerate() {
            table.push(vec![
                csv_cell(c.delta),
                csv_cell(c.per_round),
                (i + 1).to_string(),
                csv_cell(p),
            ]);
        }
    }
    write_csv(path, &["delta", "per_round", "w", "p_succ"], &table)
}

fn sigma_rows_csv(path: &Path, rows: &[SigmaRow]) -> Result<()> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.kind.clone(),
                csv_cell(r.sigma),
                csv_cell(r.accuracy),
                csv_cell(r.snr_db),
            ]
        })
        .collect();
    write_csv(path, &["kind", "sigma", "accuracy", "snr_db"], &table)
}

/// Experiment names run by `all`, in order. The `wireless` study is also
/// runnable by name; it repeats the accuracy sweep over the fading link and
/// is left out of `all` because the full waveform path dominates runtime.
pub const EXPERIMENT_NAMES: [&str; 6] = [
    "accuracy-vs-sigma",
    "train-on-all",
    "autoencoder",
    "rawiq",
    "disclosure",
    "psucc",
];

/// Runs one named experiment, writes its tables and JSON summary under
/// `out_dir`, and returns the metrics.
pub fn run_experiment(
    name: &str,
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    quiet: bool,
) -> Result<serde_json::Value> {
    std::fs::create_dir_all(out_dir).map_err(runtime)?;
    let t0 = Instant::now();
    let mut echo_cfg = cfg.clone();
    let (metrics, outputs) = match name {
        "accuracy-vs-sigma" => {
            let study = accuracy_study(cfg, seed, quiet)?;
            sigma_rows_csv(&out_dir.join("accuracy_vs_sigma.csv"), &study.rows)?;
            (
                serde_json::json!({
                    "clean_test_accuracy": study.clean_test_accuracy,
                    "baseline_seconds": study.baseline_seconds,
                    "rows": study.rows,
                }),
                vec!["accuracy_vs_sigma.csv".to_string()],
            )
        }
        "train-on-all" => {
            let study = pooled_study(cfg, seed, NoiseKind::Gaussian, quiet)?;
            sigma_rows_csv(&out_dir.join("train_on_all.csv"), &study.rows)?;
            (
                serde_json::json!({ "rows": study.rows }),
                vec!["train_on_all.csv".to_string()],
            )
        }
        "autoencoder" => {
            let bank = build_image_bank(cfg, seed, |s| s.kind == NoiseKind::None, quiet)?;
            let study = autoencoder_study(cfg, seed, &bank, quiet)?;
            let table: Vec<Vec<String>> = study
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.device.to_string(),
                        csv_cell(r.mean_val_mse),
                        csv_cell(r.tau),
                        csv_cell(r.fpr),
                        r.n_test.to_string(),
                    ]
                })
                .collect();
            write_csv(
                &out_dir.join("autoencoder.csv"),
                &["device", "mean_val_mse", "tau", "fpr", "n_test"],
                &table,
            )?;
            let roc: Vec<Vec<String>> = study
                .roc
                .iter()
                .map(|(t, fpr, tpr)| vec![csv_cell(*t), csv_cell(*fpr), csv_cell(*tpr)])
                .collect();
            write_csv(&out_dir.join("roc.csv"), &["threshold", "fpr", "tpr"], &roc)?;
            (
                serde_json::json!({
                    "pooled_fpr": study.pooled_fpr,
                    "auc": study.auc,
                    "best_threshold": study.best_threshold,
                    "rows": study.rows,
                }),
                vec!["autoencoder.csv".to_string(), "roc.csv".to_string()],
            )
        }
        "rawiq" => {
            let study = rawiq_study(cfg, seed, &cfg.dataset.sigma_grid, quiet)?;
            let table: Vec<Vec<String>> = study
                .rows
                .iter()
                .map(|(s, a)| vec![csv_cell(*s), csv_cell(*a)])
                .collect();
            write_csv(&out_dir.join("rawiq.csv"), &["sigma", "accuracy"], &table)?;
            (
                serde_json::json!({
                    "clean_test_accuracy": study.clean_test_accuracy,
                    "rows": study.rows.iter().map(|(s, a)| serde_json::json!({"sigma": s, "accuracy": a})).collect::<Vec<_>>(),
                }),
                vec!["rawiq.csv".to_string()],
            )
        }
        "disclosure" => {
            let (bank, levels) = disclosure_bank(cfg, seed, quiet)?;
            let report = disclosure_sim(cfg, seed, &bank)?;
            write_disclosure_csv(&out_dir.join("disclosure.csv"), &report)?;
            let table: Vec<Vec<String>> = levels
                .iter()
                .map(|l| {
                    vec![
                        l.level.to_string(),
                        csv_cell(l.sigma),
                        csv_cell(l.matched),
                        csv_cell(l.pooled),
                    ]
                })
                .collect();
            write_csv(
                &out_dir.join("disclosure_bank.csv"),
                &["level", "sigma", "matched_accuracy", "pooled_accuracy"],
                &table,
            )?;
            (
                serde_json::json!({
                    "legit_rate": report.legit_rate,
                    "adversary_rate": report.adversary_rate,
                    "gap": report.legit_rate - report.adversary_rate,
                    "levels": levels,
                }),
                vec!["disclosure.csv".to_string(), "disclosure_bank.csv".to_string()],
            )
        }
        "psucc" => {
            let rows = psucc_table(cfg, seed)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.w.to_string(),
                        csv_cell(r.p),
                        csv_cell(r.analytic),
                        csv_cell(r.monte_carlo),
                    ]
                })
                .collect();
            write_csv(
                &out_dir.join("psucc.csv"),
                &["w", "p", "analytic", "monte_carlo"],
                &table,
            )?;
            let curves = psucc_curve_table(cfg)?;
            psucc_curves_csv(&out_dir.join("psucc_curves.csv"), &curves)?;
            (
                serde_json::json!({ "rows": rows, "curves": curves }),
                vec!["psucc.csv".to_string(), "psucc_curves.csv".to_string()],
            )
        }
        "wireless" => {
            echo_cfg = wireless_variant(cfg);
            let study = accuracy_study(&echo_cfg, seed, quiet)?;
            sigma_rows_csv(&out_dir.join("wireless_accuracy.csv"), &study.rows)?;
            (
                serde_json::json!({
                    "clean_test_accuracy": study.clean_test_accuracy,
                    "baseline_seconds": study.baseline_seconds,
                    "rows": study.rows,
                }),
                vec!["wireless_accuracy.csv".to_string()],
            )
        }
        other => {
            return Err(BenchError::Validation(format!(
                "unknown experiment {other:?}; known: {}, wireless",
                EXPERIMENT_NAMES.join(", ")
            )));
        }
    };

    let summary = ExperimentSummary {
        experiment: name,
        seed,
        wall_clock_s: t0.elapsed().as_secs_f64(),
        outputs,
        metrics: &metrics,
        config: &echo_cfg,
    };
    write_summary(out_dir, &summary)?;
    Ok(metrics)
}

/// Accuracy study over a wireless link: same grid, full waveform path.
pub fn wireless_variant(cfg: &ExperimentConfig) -> ExperimentConfig {
    let mut c = cfg.clone();
    c.dataset.link = LinkChoice::Wireless;
    c
}

/// Trains the noise-free baseline classifier and saves it next to a JSON
/// summary. The split and model seeds match the accuracy study, so the
/// saved model is the one that study would score.
pub fn train_baseline(
    cfg: &ExperimentConfig,
    seed: u64,
    out_dir: &Path,
    quiet: bool,
) -> Result<(std::path::PathBuf, f64)> {
    std::fs::create_dir_all(out_dir).map_err(runtime)?;
    let t0 = Instant::now();
    let bank = build_image_bank(cfg, seed, |s| s.kind == NoiseKind::None, quiet)?;
    let clean = bank.dataset_of(bank.clean_cells())?;
    let (train, val, test) = split3(&clean, subseed(seed, seed_tags::SPLIT))?;
    let cls_cfg = cfg.classifier_for_run(seed, seed_tags::CLASSIFIER);
    if !quiet {
        eprintln!("training the baseline classifier on {} clean images", train.len());
    }
    let mut model = train_classifier(&cls_cfg, &train, &val).map_err(runtime)?;
    let accuracy = eval_on(&mut model, &test)?;
    let model_path = out_dir.join("classifier.model.json");
    model.save(&model_path).map_err(runtime)?;
    let summary = ExperimentSummary {
        experiment: "train",
        seed,
        wall_clock_s: t0.elapsed().as_secs_f64(),
        outputs: vec!["classifier.model.json".to_string()],
        metrics: serde_json::json!({ "clean_test_accuracy": accuracy }),
        config: cfg,
    };
    write_summary(out_dir, &summary)?;
    Ok((model_path, accuracy))
}

/// Relative-error bound every finite-difference check must stay under.
pub const GRADCHECK_BOUND: f64 = 1e-4;

/// One model family's finite-difference check.
pub struct GradCheckOutcome {
    pub name: &'static str,
    pub report: GradCheckReport,
    pub pass: bool,
}

/// Runs the finite-difference gradient checks on compact instances of all
/// three model families.
pub fn gradcheck_all(seed: u64) -> Result<Vec<GradCheckOutcome>> {
    let cls = ClassifierConfig {
        input_side: 12,
        num_classes: 4,
        hidden_widths: vec![16],
        conv_stage: Some(ConvStage {
            filters: 3,
            kernel: 3,
            pool: 2,
        }),
        ..ClassifierConfig::default()
    };
    let riq = RawIqConfig {
        window: 64,
        num_classes: 3,
        conv_filters: 3,
        conv_kernel: 9,
        conv_stride: 4,
        pool: 2,
        hidden_widths: vec![12],
        ..RawIqConfig::default()
    };
    let ae = AutoencoderConfig {
        input_dim: 36,
        hidden_units: 8,
        ..AutoencoderConfig::default()
    };
    let reports = vec![
        (
            "classifier",
            gradient_check_classifier(&cls, 5, 120, seed).map_err(runtime)?,
        ),
        (
            "rawiq",
            gradient_check_rawiq(&riq, 5, 120, seed).map_err(runtime)?,
        ),
        (
            "autoencoder",
            gradient_check_autoencoder(&ae, 6, 120, seed).map_err(runtime)?,
        ),
    ];
    Ok(reports
        .into_iter()
        .map(|(name, report)| GradCheckOutcome {
            name,
            pass: report.passes(GRADCHECK_BOUND),
            report,
        })
        .collect())
}
