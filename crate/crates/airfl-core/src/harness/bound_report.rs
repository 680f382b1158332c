//! Convergence-bound evaluation over a finished run's records.
//!
//! Supported from records alone: the centralized-CSIT bound (needs the
//! per-round active-set size) and the homogeneous weighted-aggregation bound
//! (needs the per-round weight norm). The heterogeneous variant requires the
//! full per-round weight vectors and the partial-phase envelope requires
//! interference constants, so both are library-level evaluations only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::records::RoundRecord;
use crate::harness::runner::{repetition_stream, repetition_task_stream};
use crate::learning::{
    eval_convergence_bound, least_squares_optimum, measure_gradient_variance,
    measure_smoothness, repetition_initial_model, BoundConstants, LossKind, PerRound,
};
use crate::schemes::SchemeConfig;

/// Mini-batch draws used when sampling the gradient-variance constant.
const VARIANCE_DRAWS: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundReportRow {
    pub scheme: String,
    pub repetition: usize,
    /// Cap on the run's averaged squared gradient norm.
    pub bound: f64,
    pub loss_initial: f64,
    pub loss_optimal: f64,
    pub smoothness: f64,
    pub gradient_variance: f64,
}

/// Evaluate the convergence bound of every applicable scheme and repetition
/// from a finished run's records.
///
/// Constants are measured on the quadratic task: smoothness from the
/// Hessian, the optimal loss in closed form, and the gradient variance
/// sampled along the segment between the initial model and the optimum.
pub fn evaluate_bounds(
    cfg: &ExperimentConfig,
    records: &[RoundRecord],
) -> Result<Vec<BoundReportRow>> {
    if cfg.task.loss != LossKind::LeastSquares {
        return Err(Error::ConfigValidation(vec![
            "bound evaluation needs task.loss = \"least_squares\" (the optimal loss must be computable)"
                .into(),
        ]));
    }
    let applicable: Vec<&(String, SchemeConfig)> = cfg
        .schemes
        .iter()
        .filter(|(_, s)| {
            matches!(
                s,
                SchemeConfig::GlobalCsit { .. }
                    | SchemeConfig::Wafel {
                        heterogeneous: false,
                        ..
                    }
            )
        })
        .collect();
    if applicable.is_empty() {
        return Err(Error::ConfigValidation(vec![
            "no scheme in the config supports record-based bound evaluation (global_csit or homogeneous wafel)"
                .into(),
        ]));
    }

    let mut rows = Vec::new();
    for rep in 0..cfg.repetitions {
        let task = cfg.task.build(repetition_task_stream(cfg.seed, rep))?;
        let initial = repetition_initial_model(&task, repetition_stream(cfg.seed, rep));
        let loss_initial = task.global_loss(&initial)?;
        let (optimum, loss_optimal) = least_squares_optimum(&task)?;
        let smoothness = measure_smoothness(&task)?;
        // probe the segment from the initial model to the optimum
        let probes: Vec<_> = (0..=4)
            .map(|i| {
                let t = i as f64 / 4.0;
                let mut p = initial.clone();
                p.scale(1.0 - t);
                p.add_scaled(&optimum, t);
                p
            })
            .collect();
        let gradient_variance = measure_gradient_variance(
            &task,
            &probes,
            cfg.training.batch,
            VARIANCE_DRAWS,
            repetition_stream(cfg.seed, rep).substream(777),
        )?;
        let constants = BoundConstants {
            smoothness,
            gradient_variance,
            ..BoundConstants::default()
        };

        for (label, scheme) in &applicable {
            let mut series: Vec<&RoundRecord> = records
                .iter()
                .filter(|r| r.repetition == rep && &r.scheme == label)
                .collect();
            series.sort_by_key(|r| r.round);
            if series.len() != cfg.training.rounds {
                return Err(Error::Precondition(format!(
                    "scheme '{label}' repetition {rep}: {} record rows for {} rounds (aborted run?)",
                    series.len(),
                    cfg.training.rounds
                )));
            }
            let per_round = match scheme {
                SchemeConfig::GlobalCsit { .. } => PerRound::GlobalCsit(
                    series
                        .iter()
                        .map(|r| {
                            r.pred_mse
                                .ok_or_else(|| {
                                    Error::Precondition(format!(
                                        "scheme '{label}' round {} lacks a predicted MSE",
                                        r.round
                                    ))
                                })
                                .map(|mse| (mse, r.active_set))
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                SchemeConfig::Wafel { .. } => PerRound::Wafel(
                    series
                        .iter()
                        .map(|r| {
                            r.pred_mse
                                .ok_or_else(|| {
                                    Error::Precondition(format!(
                                        "scheme '{label}' round {} lacks a predicted MSE",
                                        r.round
                                    ))
                                })
                                .map(|mse| (mse, r.weight_norm * r.weight_norm))
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                _ => unreachable!("filtered above"),
            };
            let bound = eval_convergence_bound(
                &per_round,
                &constants,
                &cfg.training,
                loss_initial,
                loss_optimal,
            )?;
            rows.push(BoundReportRow {
                scheme: (*label).clone(),
                repetition: rep,
                bound: bound.scalar().expect("FedAvg-style bounds are scalar"),
                loss_initial,
                loss_optimal,
                smoothness,
                gradient_variance,
            });
        }
    }
    Ok(rows)
}
