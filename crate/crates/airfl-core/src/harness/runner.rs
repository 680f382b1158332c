//! Experiment execution: paired repetitions, record emission, summary.

use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::records::{
    emit_records, emit_summary, summarize, RoundRecord, Summary,
};
use crate::learning::run_federated_training_resilient;
use crate::numerics::RngStream;

/// Root tag under which repetition streams are derived.
const TAG_REPETITION: u64 = 100;
/// Tag for the per-repetition task data.
const TAG_TASK: u64 = 101;

/// The stream driving repetition `rep`; every scheme in that repetition
/// trains from it, which is what makes the comparison paired.
pub fn repetition_stream(seed: u64, rep: usize) -> RngStream {
    RngStream::new(seed)
        .substream(TAG_REPETITION)
        .substream(rep as u64)
}

/// The stream the repetition's task data is generated from.
pub fn repetition_task_stream(seed: u64, rep: usize) -> RngStream {
    repetition_stream(seed, rep).substream(TAG_TASK)
}

/// Outcome of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub records: Vec<RoundRecord>,
    pub summary: Summary,
    /// `(repetition, scheme label, error text)` for schemes that aborted.
    pub failures: Vec<(usize, String, String)>,
}

impl ExperimentReport {
    pub fn any_aborted(&self) -> bool {
        !self.failures.is_empty()
    }
}

/// Run every scheme on identical per-repetition draws and collect records.
///
/// A scheme failure mid-run flags the failing round, keeps the partial
/// series, and the remaining schemes still run; the failure is reported in
/// the returned summary rather than as an error.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for rep in 0..cfg.repetitions {
        let rep_stream = repetition_stream(cfg.seed, rep);
        let task = cfg.task.build(repetition_task_stream(cfg.seed, rep))?;
        for (label, scheme) in &cfg.schemes {
            let (output, failure) = run_federated_training_resilient(
                &task,
                scheme,
                &cfg.wireless,
                &cfg.training,
                cfg.heterogeneity.as_ref(),
                rep_stream,
            )?;
            for log in &output.rounds {
                records.push(RoundRecord {
                    repetition: rep,
                    round: log.round,
                    scheme: label.clone(),
                    loss: log.train_loss,
                    accuracy: log.test_accuracy,
                    agg_error: log.agg_error,
                    pred_mse: log.predicted_mse,
                    active_set: log.active_set_size,
                    weight_norm: log.weight_norm,
                    flags: log.flags.tokens().iter().map(|s| s.to_string()).collect(),
                });
            }
            if let Some(err) = failure {
                // emit a sentinel row for the failed round so the series is
                // visibly truncated, then move on to the next scheme
                let failed_round = output.rounds.len();
                records.push(RoundRecord {
                    repetition: rep,
                    round: failed_round,
                    scheme: label.clone(),
                    loss: f64::NAN,
                    accuracy: f64::NAN,
                    agg_error: f64::NAN,
                    pred_mse: None,
                    active_set: 0,
                    weight_norm: 0.0,
                    flags: vec!["aborted".to_string()],
                });
                failures.push((rep, label.clone(), err.to_string()));
            }
        }
    }
    let summary = summarize(&records);
    Ok(ExperimentReport {
        records,
        summary,
        failures,
    })
}

/// Run the experiment and write `records.csv`, `summary.json`, and the
/// resolved configuration echo into `dir`.
pub fn run_experiment_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<ExperimentReport> {
    let report = run_experiment(cfg)?;
    emit_records(&report.records, dir)?;
    emit_summary(&report.summary, dir)?;
    let echo_path = dir.join("resolved_config.toml");
    std::fs::write(&echo_path, cfg.resolved_toml()).map_err(|source| Error::Io {
        path: echo_path,
        source,
    })?;
    Ok(report)
}
