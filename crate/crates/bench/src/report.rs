//! Report files: plain CSV tables, one per figure-equivalent, and a JSON
//! summary per experiment carrying the seeds and the config echo.
//!
//! CSV cells are written with the shortest round-trip float formatting, so
//! a rerun with the same seeds produces byte-identical tables. Wall-clock
//! time lives only in the JSON summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::{runtime, Result};

/// Formats one CSV cell; floats use the shortest exact representation.
pub fn csv_cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes a header plus rows; every row must match the header width.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        assert_eq!(row.len(), header.len(), "ragged CSV row for {path:?}");
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text).map_err(runtime)
}

/// Everything needed to audit or regenerate one experiment run.
#[derive(Debug, Serialize)]
pub struct ExperimentSummary<'a, M: Serialize> {
    pub experiment: &'a str,
    /// Resolved run seed after flag and environment overrides.
    pub seed: u64,
    pub wall_clock_s: f64,
    /// Files this run produced, relative to the output directory.
    pub outputs: Vec<String>,
    pub metrics: M,
    /// The full configuration the run resolved to.
    pub config: &'a ExperimentConfig,
}

/// Writes the JSON summary and the TOML config echo next to the tables.
pub fn write_summary<M: Serialize>(
    out_dir: &Path,
    summary: &ExperimentSummary<'_, M>,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir).map_err(runtime)?;
    let echo = summary.config.to_toml()?;
    fs::write(out_dir.join("config_echo.toml"), echo).map_err(runtime)?;
    let path = out_dir.join(format!("{}.json", summary.experiment));
    let text = serde_json::to_string_pretty(summary).map_err(runtime)?;
    fs::write(&path, text).map_err(runtime)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip() {
        for v in [0.1085, 1.0 / 3.0, 2e-7, 45.0, f64::MIN_POSITIVE] {
            assert_eq!(csv_cell(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(csv_cell(f64::INFINITY), "inf");
        assert_eq!(csv_cell(f64::NEG_INFINITY), "-inf");
        assert_eq!(csv_cell(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = vec![
            vec!["gaussian".into(), csv_cell(0.02), csv_cell(0.85)],
            vec!["impulse".into(), csv_cell(0.05), csv_cell(0.1)],
        ];
        write_csv(&path, &["kind", "sigma", "accuracy"], &rows).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "kind,sigma,accuracy\ngaussian,0.02,0.85\nimpulse,0.05,0.1\n"
        );
        write_csv(&path, &["kind", "sigma", "accuracy"], &rows).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), text);
    }

    #[test]
    fn summary_carries_the_config_echo() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        let summary = ExperimentSummary {
            experiment: "probe",
            seed: 3,
            wall_clock_s: 0.25,
            outputs: vec!["probe.csv".into()],
            metrics: serde_json::json!({ "accuracy": 0.9 }),
            config: &cfg,
        };
        let path = write_summary(dir.path(), &summary).unwrap();
        let text = fs::read_to_string(path).unwrap();
        assert!(text.contains("\"experiment\": \"probe\""));
        let echo = fs::read_to_string(dir.path().join("config_echo.toml")).unwrap();
        let back: ExperimentConfig = toml::from_str(&echo).unwrap();
        assert_eq!(back, cfg);
    }
}
