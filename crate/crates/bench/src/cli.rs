//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on validation errors (bad flags, bad config,
//! bad values), 2 on runtime failures (I/O, training, simulation).

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use hideprint_core::protocol::majority_success_prob;

use crate::config::{resolve_seed, ExperimentConfig};
use crate::dataset::generate_dataset;
use crate::experiments::{gradcheck_all, run_experiment, train_baseline, EXPERIMENT_NAMES};
use crate::{validation, Result};

#[derive(Debug, Parser)]
#[command(
    name = "hideprint",
    version,
    about = "Radio fingerprinting pipeline: dataset synthesis, model training, and disclosure protocol studies"
)]
struct Cli {
    /// TOML experiment config; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Run seed; overrides HIDEPRINT_SEED and the config file.
    #[arg(long, global = true, value_name = "u64")]
    seed: Option<u64>,
    /// Output directory; overrides the config's output_dir.
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    /// Suppress progress output on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize the measurement grid into IQ files with JSON sidecars.
    Generate,
    /// Train the baseline classifier on the noise-free cells and save it.
    Train,
    /// Run one named experiment, or all of them, writing CSV and JSON reports.
    Evaluate {
        /// accuracy-vs-sigma | train-on-all | autoencoder | rawiq |
        /// disclosure | psucc | wireless | all
        #[arg(long, default_value = "all")]
        experiment: String,
    },
    /// Train the per-level model bank and run the scheduled disclosure.
    ProtocolSim,
    /// Print the analytic majority-vote success probability.
    Psucc {
        /// Per-vote accuracy.
        #[arg(long, default_value_t = 0.96)]
        p: f64,
        /// Number of votes.
        #[arg(long, default_value_t = 6)]
        w: u64,
    },
    /// Check model gradients against finite differences.
    Gradcheck,
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code instead of exiting so tests can drive it in-process.
pub fn run(argv: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are successful outcomes; everything else
            // is a usage problem.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    // Bake the resolved seed and output directory into the config so every
    // echo regenerates the same artifacts without flags.
    cfg.seed = resolve_seed(cli.seed, cfg.seed)?;
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let seed = cfg.seed;
    let out = cfg.output_dir.clone();
    let quiet = cli.quiet;

    match cli.command {
        Command::Generate => {
            let dir = out.join("dataset");
            let records = generate_dataset(&cfg, seed, &dir, quiet)?;
            println!("wrote {} cells to {}", records.len(), dir.display());
        }
        Command::Train => {
            let (path, accuracy) = train_baseline(&cfg, seed, &out, quiet)?;
            println!(
                "saved {} (held-out accuracy {accuracy:.4})",
                path.display()
            );
        }
        Command::Evaluate { experiment } => {
            let names: Vec<&str> = if experiment == "all" {
                EXPERIMENT_NAMES.to_vec()
            } else {
                vec![experiment.as_str()]
            };
            for name in names {
                let dir = out.join(name);
                run_experiment(name, &cfg, seed, &dir, quiet)?;
                println!("wrote {}", dir.display());
            }
        }
        Command::ProtocolSim => {
            let dir = out.join("disclosure");
            let metrics = run_experiment("disclosure", &cfg, seed, &dir, quiet)?;
            let pick = |k: &str| metrics.get(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            println!(
                "legit {:.4} adversary {:.4} (reports in {})",
                pick("legit_rate"),
                pick("adversary_rate"),
                dir.display()
            );
        }
        Command::Psucc { p, w } => {
            let value = majority_success_prob(w, p).map_err(validation)?;
            println!("{value}");
        }
        Command::Gradcheck => {
            let outcomes = gradcheck_all(seed)?;
            let mut all_pass = true;
            for o in &outcomes {
                println!(
                    "{}: {} coordinates, max relative error {:.3e} -> {}",
                    o.name,
                    o.report.checked,
                    o.report.max_rel_err,
                    if o.pass { "ok" } else { "FAIL" }
                );
                all_pass &= o.pass;
            }
            if !all_pass {
                return Err(crate::BenchError::Runtime(
                    "a gradient check exceeded the error bound".into(),
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn unknown_flags_exit_with_usage_code() {
        assert_eq!(run(args(&["hideprint", "psucc", "--bogus"])), 1);
        assert_eq!(run(args(&["hideprint", "no-such-command"])), 1);
        assert_eq!(run(args(&["hideprint"])), 1);
    }

    #[test]
    fn help_is_not_an_error() {
        assert_eq!(run(args(&["hideprint", "--help"])), 0);
        assert_eq!(run(args(&["hideprint", "psucc", "--help"])), 0);
    }

    #[test]
    fn missing_config_file_is_a_validation_error() {
        assert_eq!(
            run(args(&["hideprint", "generate", "--config", "missing.file"])),
            1
        );
    }

    #[test]
    fn psucc_validates_its_inputs() {
        assert_eq!(run(args(&["hideprint", "psucc", "--p", "1.5"])), 1);
        assert_eq!(run(args(&["hideprint", "psucc", "--w", "0"])), 1);
        assert_eq!(run(args(&["hideprint", "psucc", "--p", "0.96", "--w", "6"])), 0);
    }
}
