//! Throwaway diagnostics for calibrating the dataset defaults.

use hideprint_bench::config::{seed_tags, subseed, ExperimentConfig};
use hideprint_bench::experiments::{build_image_bank, split3};
use hideprint_core::learn::{pca_project, silhouette, train_classifier};
use hideprint_core::rfchain::NoiseKind;
use ndarray::Array2;

fn main() {
    let mut cfg = ExperimentConfig::default();
    let args: Vec<String> = std::env::args().collect();
    if args.len() > 1 {
        cfg.dataset.fingerprint_strength = args[1].parse().unwrap();
    }
    if args.len() > 2 {
        cfg.dataset.awgn_snr_db = Some(args[2].parse().unwrap());
    }
    let sigma: f64 = if args.len() > 3 {
        args[3].parse().unwrap_or(0.0)
    } else {
        0.0
    };
    let seed = 7u64;

    if args.len() > 4 && args[4] == "bank" {
        // args: strength floor grid_max bank [samples_m]
        cfg.protocol.fingerprint_strength = cfg.dataset.fingerprint_strength;
        cfg.protocol.sigma_grid = if args[3].contains(',') {
            args[3].split(',').map(|s| s.parse().unwrap()).collect()
        } else {
            let grid_max: f64 = args[3].parse().unwrap();
            (0..cfg.protocol.n_levels)
                .map(|i| grid_max * i as f64 / (cfg.protocol.n_levels - 1) as f64)
                .collect()
        };
        cfg.protocol.n_levels = cfg.protocol.sigma_grid.len();
        if args.len() > 5 {
            cfg.protocol.samples_per_cell = (args[5].parse::<f64>().unwrap() * 1e6) as usize;
        }
        if args.len() > 6 {
            cfg.classifier.hidden_widths = vec![args[6].parse().unwrap()];
        }
        if args.len() > 7 {
            if let Some(stage) = cfg.classifier.conv_stage.as_mut() {
                stage.filters = args[7].parse().unwrap();
            }
        }
        let t0 = std::time::Instant::now();
        let (bank2, levels) =
            hideprint_bench::experiments::disclosure_bank(&cfg, seed, true).unwrap();
        println!("level sigma matched pooled");
        for l in &levels {
            println!(
                "  {} {:.3}: {:.3} {:.3}",
                l.level, l.sigma, l.matched, l.pooled
            );
        }
        let m: f64 = bank2.legit_accuracy.iter().sum::<f64>() / levels.len() as f64;
        let a: f64 = bank2.adversary_accuracy.iter().sum::<f64>() / levels.len() as f64;
        println!(
            "means: matched {m:.3} pooled {a:.3} gap {:.3} in {:.0}s",
            m - a,
            t0.elapsed().as_secs_f64()
        );
        let report = hideprint_bench::experiments::disclosure_sim(&cfg, seed, &bank2).unwrap();
        println!(
            "sim: legit {:.4} adversary {:.4} gap {:.4} over {} slots x {} votes",
            report.legit_rate,
            report.adversary_rate,
            report.legit_rate - report.adversary_rate,
            cfg.protocol.n_slots,
            cfg.protocol.votes_per_slot
        );
        return;
    }
    let keep: Box<dyn Fn(&hideprint_bench::dataset::CellSpec) -> bool> = if sigma == 0.0 {
        Box::new(|s: &hideprint_bench::dataset::CellSpec| s.kind == NoiseKind::None)
    } else {
        Box::new(move |s: &hideprint_bench::dataset::CellSpec| {
            s.kind == NoiseKind::Gaussian && (s.sigma - sigma).abs() < 1e-12
        })
    };
    let bank = build_image_bank(&cfg, seed, keep, true).unwrap();
    println!(
        "strength {} floor {:?} sigma {}: {} cells, {} images/cell",
        cfg.dataset.fingerprint_strength,
        cfg.dataset.awgn_snr_db,
        sigma,
        bank.cells.len(),
        bank.cells[0].rows.len()
    );

    for cell in &bank.cells {
        let row = &cell.rows[0];
        let side = 64usize;
        let lit = row.iter().filter(|&&v| v > 0.0).count();
        let sat = row.iter().filter(|&&v| v >= 1.0).count();
        let mass: f64 = row.iter().sum();
        let mut com_r = 0.0;
        let mut com_c = 0.0;
        for (i, &v) in row.iter().enumerate() {
            com_r += (i / side) as f64 * v;
            com_c += (i % side) as f64 * v;
        }
        println!(
            "dev {:2}: lit {:4} sat {:4} mass {:8.1} com ({:5.1},{:5.1})",
            cell.device,
            lit,
            sat,
            mass,
            com_r / mass,
            com_c / mass
        );
    }

    {
        use hideprint_bench::dataset::{synth_cell, CellSpec};
        use hideprint_core::imaging::images_from_symbols;
        let spec = CellSpec {
            device: 0,
            kind: if sigma == 0.0 { NoiseKind::None } else { NoiseKind::Gaussian },
            sigma,
        };
        let cell = synth_cell(
            &cfg.dataset,
            cfg.dataset.fingerprint_strength,
            &spec,
            subseed(seed, seed_tags::DATASET),
        )
        .unwrap();
        let n = 100_000.min(cell.symbols.len());
        let chunk = &cell.symbols[..n];
        let mean_i = chunk.iter().map(|z| z.re).sum::<f64>() / n as f64;
        let mean_q = chunk.iter().map(|z| z.im).sum::<f64>() / n as f64;
        let var_i = chunk.iter().map(|z| (z.re - mean_i).powi(2)).sum::<f64>() / n as f64;
        let var_q = chunk.iter().map(|z| (z.im - mean_q).powi(2)).sum::<f64>() / n as f64;
        let abs_i_mean = chunk.iter().map(|z| z.re.abs()).sum::<f64>() / n as f64;
        println!(
            "dev0 symbols: mean ({mean_i:.4},{mean_q:.4}) std ({:.5},{:.5}) mean|I| {abs_i_mean:.4}",
            var_i.sqrt(),
            var_q.sqrt()
        );
        let imgs = images_from_symbols(chunk, &cfg.imaging).unwrap();
        println!("dev0 first-chunk bounds: {:?}", imgs[0].bounds);
    }

    let ds = bank.dataset_of(bank.cells.iter()).unwrap();
    let proj = pca_project(&ds.x, 8).unwrap();
    let sil = silhouette(&proj.coords, &ds.y).unwrap();
    println!("PCA-8 silhouette by device: {sil:.3}");

    if args.len() > 4 && args[4] == "rawiq" {
        let t0 = std::time::Instant::now();
        let study =
            hideprint_bench::experiments::rawiq_study(&cfg, seed, &[0.005, 0.01, 0.02], true)
                .unwrap();
        println!("rawiq clean test accuracy {:.3}", study.clean_test_accuracy);
        for (s, acc) in &study.rows {
            println!("  rawiq sigma {s}: accuracy {acc:.3}");
        }
        println!("rawiq study in {:.1}s", t0.elapsed().as_secs_f64());
        return;
    }
    if args.len() > 4 && args[4] == "train" {
        let (train, val, test) = split3(&ds, subseed(seed, seed_tags::SPLIT)).unwrap();
        let cls = cfg.classifier_for_run(seed, seed_tags::CLASSIFIER);
        let t0 = std::time::Instant::now();
        let mut model = train_classifier(&cls, &train, &val).unwrap();
        let acc = model.accuracy(&test).unwrap();
        println!(
            "held-out accuracy {:.3} in {:.1}s ({} train images, {} epochs)",
            acc,
            t0.elapsed().as_secs_f64(),
            train.len(),
            model.history.len()
        );
        for s in [0.005, 0.01, 0.015, 0.02, 0.03, 0.05] {
            let nb = build_image_bank(
                &cfg,
                seed,
                |c: &hideprint_bench::dataset::CellSpec| {
                    c.kind == NoiseKind::Gaussian && (c.sigma - s).abs() < 1e-12
                },
                true,
            );
            let nb = match nb {
                Ok(b) => b,
                Err(_) => {
                    let mut c2 = cfg.clone();
                    c2.dataset.sigma_grid = vec![0.0, s];
                    build_image_bank(&c2, seed, move |c| {
                        c.kind == NoiseKind::Gaussian && (c.sigma - s).abs() < 1e-12
                    }, true)
                    .unwrap()
                }
            };
            let nds = nb.dataset_of(nb.cells.iter()).unwrap();
            println!("  sigma {s}: accuracy {:.3}", model.accuracy(&nds).unwrap());
        }
    }
    let _ = Array2::<f64>::zeros((1, 1));
}
