//! Experiment harness: configuration, paired execution, record files, and
//! record-based bound reports.

mod bound_report;
mod config;
mod records;
mod runner;

pub use bound_report::{evaluate_bounds, BoundReportRow};
pub use config::{load_config, parse_config, ExperimentConfig, TaskSpec};
pub use records::{
    emit_records, emit_summary, parse_records, render_records, summarize, RoundRecord,
    SchemeSummary, Summary, RECORDS_HEADER,
};
pub use runner::{
    repetition_stream, repetition_task_stream, run_experiment, run_experiment_to_dir,
    ExperimentReport,
};
