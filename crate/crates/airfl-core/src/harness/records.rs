//! Round records: the delimited on-disk table and its summary.
//!
//! The table schema is fixed; see [`RECORDS_HEADER`]. Floats are written in
//! Rust's shortest round-trip form, so emit -> parse -> emit is the
//! identity and repeated runs produce byte-identical files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fixed header of `records.csv`. Column meanings: training loss and
/// held-out accuracy of the post-round model, the scheme's aggregation
/// error `||w_G - target||`, its closed-form MSE prediction (empty when the
/// scheme has none), the active-set size, the L2 norm of the effective
/// aggregation weights, and `;`-joined condition flags (`-` when clear).
pub const RECORDS_HEADER: &str =
    "repetition,round,scheme,loss,accuracy,agg_error,pred_mse,active_set,weight_norm,flags";

/// One `(repetition, round, scheme)` row.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    pub repetition: usize,
    pub round: usize,
    pub scheme: String,
    pub loss: f64,
    pub accuracy: f64,
    pub agg_error: f64,
    pub pred_mse: Option<f64>,
    pub active_set: usize,
    pub weight_norm: f64,
    pub flags: Vec<String>,
}

impl RoundRecord {
    pub fn to_line(&self) -> String {
        let pred = match self.pred_mse {
            Some(v) => format!("{v}"),
            None => String::new(),
        };
        let flags = if self.flags.is_empty() {
            "-".to_string()
        } else {
            self.flags.join(";")
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.repetition,
            self.round,
            self.scheme,
            self.loss,
            self.accuracy,
            self.agg_error,
            pred,
            self.active_set,
            self.weight_norm,
            flags
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::invalid(format!(
                "record has {} fields, expected 10: {line}",
                fields.len()
            )));
        }
        let parse_f64 = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad {name} value '{s}'")))
        };
        let parse_usize = |s: &str, name: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::invalid(format!("bad {name} value '{s}'")))
        };
        Ok(RoundRecord {
            repetition: parse_usize(fields[0], "repetition")?,
            round: parse_usize(fields[1], "round")?,
            scheme: fields[2].to_string(),
            loss: parse_f64(fields[3], "loss")?,
            accuracy: parse_f64(fields[4], "accuracy")?,
            agg_error: parse_f64(fields[5], "agg_error")?,
            pred_mse: if fields[6].is_empty() {
                None
            } else {
                Some(parse_f64(fields[6], "pred_mse")?)
            },
            active_set: parse_usize(fields[7], "active_set")?,
            weight_norm: parse_f64(fields[8], "weight_norm")?,
            flags: if fields[9] == "-" {
                Vec::new()
            } else {
                fields[9].split(';').map(str::to_string).collect()
            },
        })
    }
}

/// Render the full table, header first.
pub fn render_records(records: &[RoundRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

/// Parse a table produced by [`render_records`].
pub fn parse_records(text: &str) -> Result<Vec<RoundRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RECORDS_HEADER => {}
        Some(h) => {
            return Err(Error::invalid(format!(
                "unexpected header '{h}', expected '{RECORDS_HEADER}'"
            )))
        }
        None => return Err(Error::invalid("empty records table")),
    }
    lines.map(RoundRecord::parse_line).collect()
}

/// Write `records.csv` into `dir`, creating it if needed.
pub fn emit_records(records: &[RoundRecord], dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join("records.csv");
    std::fs::write(&path, render_records(records)).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Per-scheme series averaged across repetitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSummary {
    pub scheme: String,
    pub repetitions: usize,
    pub rounds: usize,
    /// Mean training loss per round across repetitions.
    pub mean_loss: Vec<f64>,
    /// Mean held-out accuracy per round across repetitions.
    pub mean_accuracy: Vec<f64>,
    pub mean_agg_error: Vec<f64>,
    pub mean_active_set: Vec<f64>,
    pub final_accuracy_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schemes: Vec<SchemeSummary>,
}

/// Aggregate records into per-scheme mean series (schemes in order of first
/// appearance).
pub fn summarize(records: &[RoundRecord]) -> Summary {
    let mut order: Vec<String> = Vec::new();
    let mut buckets: BTreeMap<String, BTreeMap<usize, Vec<&RoundRecord>>> = BTreeMap::new();
    for r in records {
        if !order.contains(&r.scheme) {
            order.push(r.scheme.clone());
        }
        buckets
            .entry(r.scheme.clone())
            .or_default()
            .entry(r.round)
            .or_default()
            .push(r);
    }
    let mut schemes = Vec::new();
    for scheme in order {
        let rounds_map = &buckets[&scheme];
        let rounds = rounds_map.len();
        let mut mean_loss = Vec::with_capacity(rounds);
        let mut mean_accuracy = Vec::with_capacity(rounds);
        let mut mean_agg_error = Vec::with_capacity(rounds);
        let mut mean_active_set = Vec::with_capacity(rounds);
        let mut reps = 0usize;
        for rows in rounds_map.values() {
            reps = reps.max(rows.len());
            let n = rows.len() as f64;
            mean_loss.push(rows.iter().map(|r| r.loss).sum::<f64>() / n);
            mean_accuracy.push(rows.iter().map(|r| r.accuracy).sum::<f64>() / n);
            mean_agg_error.push(rows.iter().map(|r| r.agg_error).sum::<f64>() / n);
            mean_active_set.push(rows.iter().map(|r| r.active_set as f64).sum::<f64>() / n);
        }
        let final_accuracy_mean = mean_accuracy.last().copied().unwrap_or(0.0);
        schemes.push(SchemeSummary {
            scheme,
            repetitions: reps,
            rounds,
            mean_loss,
            mean_accuracy,
            mean_agg_error,
            mean_active_set,
            final_accuracy_mean,
        });
    }
    Summary { schemes }
}

/// Write `summary.json` into `dir`.
pub fn emit_summary(summary: &Summary, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(summary)
        .map_err(|e| Error::invalid(format!("summary serialization failed: {e}")))?;
    std::fs::write(&path, json).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}
