//! `airfl` — run, validate, and analyze over-the-air federated learning
//! experiments.
//!
//! Exit codes: 0 on success, 1 on configuration validation failure, 2 on a
//! runtime abort (a scheme failed mid-experiment or an analysis
//! precondition does not hold).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use airfl_core::error::Error;
use airfl_core::harness::{
    evaluate_bounds, load_config, parse_records, run_experiment_to_dir, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "airfl",
    about = "Deterministic simulator for over-the-air federated learning",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scheme in the configuration on paired draws and write
    /// records.csv, summary.json, and the resolved configuration.
    Run {
        config: PathBuf,
        /// Output directory (defaults to the configuration's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured repetition count.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Parse and validate a configuration, reporting every problem.
    Validate { config: PathBuf },
    /// Evaluate convergence bounds from a finished run's records.
    Bound {
        config: PathBuf,
        /// Directory holding records.csv (defaults to the configuration's
        /// `output`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    match load_config(config) {
        Ok(cfg) => Ok(cfg),
        Err(e) => {
            eprintln!("{e}");
            Err(exit_code_for(&e))
        }
    }
}

fn exit_code_for(error: &Error) -> ExitCode {
    match error {
        Error::ConfigValidation(_) | Error::ConfigParse(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(command: Command) -> ExitCode {
    match command {
        Command::Run {
            config,
            out,
            seed,
            reps,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(reps) = reps {
                if reps == 0 {
                    eprintln!("--reps must be at least 1");
                    return ExitCode::from(1);
                }
                cfg.repetitions = reps;
            }
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            match run_experiment_to_dir(&cfg, &dir) {
                Ok(report) => {
                    println!(
                        "wrote {} records for {} schemes x {} repetitions to {}",
                        report.records.len(),
                        cfg.schemes.len(),
                        cfg.repetitions,
                        dir.display()
                    );
                    for s in &report.summary.schemes {
                        println!(
                            "  {:<16} final mean accuracy {:.4}",
                            s.scheme, s.final_accuracy_mean
                        );
                    }
                    if report.any_aborted() {
                        for (rep, scheme, err) in &report.failures {
                            eprintln!("scheme '{scheme}' aborted in repetition {rep}: {err}");
                        }
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    exit_code_for(&e)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!(
                    "configuration valid: {} scheme(s), {} repetition(s), seed {}",
                    cfg.schemes.len(),
                    cfg.repetitions,
                    cfg.seed
                );
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Bound { config, out } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            let records_path = dir.join("records.csv");
            let text = match std::fs::read_to_string(&records_path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", records_path.display());
                    return ExitCode::from(2);
                }
            };
            let records = match parse_records(&text) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match evaluate_bounds(&cfg, &records) {
                Ok(rows) => {
                    let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
                    let path = dir.join("bounds.json");
                    if let Err(e) = std::fs::write(&path, &json) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                    for row in &rows {
                        println!(
                            "{:<16} rep {:>2}  bound {:.6e}  (L = {:.4}, sigma_g^2 = {:.4})",
                            row.scheme, row.repetition, row.bound, row.smoothness,
                            row.gradient_variance
                        );
                    }
                    println!("wrote {}", path.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    exit_code_for(&e)
                }
            }
        }
    }
}

fn main() -> ExitCode {
    run(Cli::parse().command)
}
