//! The federated training loop with pluggable over-the-air aggregation.

use crate::channel::{
    draw_round_noise, make_partial_phase_view, ChannelModel, CsiKind, CsiView, NoiseConfig,
};
use crate::error::{Error, Result};
use crate::learning::hetero::HeterogeneityProfile;
use crate::learning::model::{weighted_sum, ModelVector};
use crate::learning::sgd::local_sgd;
use crate::learning::task::FederatedTask;
use crate::numerics::RngStream;
use crate::optim::WeightVector;
use crate::schemes::{
    aggregate_round, AggregationInput, OutcomeFlags, SchemeConfig, WeightsUsed,
};

// Stream tags for the per-round randomness. Draws are keyed, never
// sequential, so every scheme inside a repetition sees identical channels,
// noise, phase errors, and mini-batches.
const TAG_INIT: u64 = 1;
const TAG_SGD: u64 = 2;
const TAG_CHANNEL: u64 = 3;
const TAG_NOISE: u64 = 4;
const TAG_PHASE: u64 = 5;

/// Learning-rate schedule for the local steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LrSchedule {
    Constant(f64),
    /// `mu_t = theta / (t + 1)` for the 0-based round index `t`.
    Diminishing { theta: f64 },
}

impl LrSchedule {
    pub fn rate(&self, round: usize) -> f64 {
        match *self {
            LrSchedule::Constant(mu) => mu,
            LrSchedule::Diminishing { theta } => theta / (round as f64 + 1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            LrSchedule::Constant(mu) => mu,
            LrSchedule::Diminishing { theta } => theta,
        };
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::invalid(format!(
                "learning rate parameter must be positive, got {v}"
            )));
        }
        Ok(())
    }
}

/// FedAvg hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    pub lr: LrSchedule,
    /// Local steps per round (tau).
    pub local_steps: usize,
    /// Communication rounds (T).
    pub rounds: usize,
    /// Homogeneous batch size (overridden per device by a heterogeneity
    /// profile).
    pub batch: usize,
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        self.lr.validate()?;
        if self.local_steps == 0 || self.rounds == 0 || self.batch == 0 {
            return Err(Error::invalid(
                "local steps, rounds, and batch size must be positive",
            ));
        }
        Ok(())
    }
}

/// The wireless system shared by all schemes in an experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WirelessConfig {
    pub channel: ChannelModel,
    pub antennas: usize,
    pub noise: NoiseConfig,
    /// Per-device transmit power budget P.
    pub power: f64,
    /// Accuracy of the devices' phase estimates, in [0, pi/2).
    pub phase_error_bound: f64,
}

impl WirelessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::invalid("need at least one antenna"));
        }
        self.noise.validate()?;
        if !self.power.is_finite() || self.power <= 0.0 {
            return Err(Error::invalid(format!(
                "power must be positive, got {}",
                self.power
            )));
        }
        if !self.phase_error_bound.is_finite()
            || self.phase_error_bound < 0.0
            || self.phase_error_bound >= std::f64::consts::FRAC_PI_2
        {
            return Err(Error::invalid(format!(
                "phase error bound must lie in [0, pi/2), got {}",
                self.phase_error_bound
            )));
        }
        Ok(())
    }
}

/// Diagnostics for one communication round.
#[derive(Clone, Debug)]
pub struct RoundLog {
    pub round: usize,
    /// Global training loss of the post-aggregation model.
    pub train_loss: f64,
    /// Held-out loss of the post-aggregation model.
    pub test_loss: f64,
    /// Held-out accuracy of the post-aggregation model.
    pub test_accuracy: f64,
    /// `||w_G - target||` where the target is the scheme's intended
    /// aggregate for this round.
    pub agg_error: f64,
    pub predicted_mse: Option<f64>,
    pub active_set_size: usize,
    /// L2 norm of the effective aggregation weights.
    pub weight_norm: f64,
    pub flags: OutcomeFlags,
    /// `||grad F(w_G^t)||^2` at the pre-aggregation model, the quantity the
    /// convergence bounds control.
    pub global_grad_norm_sq: f64,
    /// Fingerprint of this round's channel realization; equal across schemes
    /// within a repetition.
    pub channel_fingerprint: u64,
}

/// Everything a training run produces.
#[derive(Clone, Debug)]
pub struct TrainingOutput {
    pub rounds: Vec<RoundLog>,
    /// `w_G^0 .. w_G^T` (length `rounds + 1`).
    pub trajectory: Vec<ModelVector>,
    pub final_model: ModelVector,
}

/// Exact weighted aggregation over an orthogonal (error-free) uplink.
pub fn ideal_orthogonal_aggregate(
    models: &[ModelVector],
    weights: &WeightVector,
) -> Result<ModelVector> {
    if models.len() != weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} models",
            weights.len(),
            models.len()
        )));
    }
    if models.is_empty() {
        return Err(Error::invalid("cannot aggregate zero models"));
    }
    Ok(weighted_sum(models, weights.as_slice()))
}

fn scheme_target(
    scheme: &SchemeConfig,
    models: &[ModelVector],
    outcome_active: &[usize],
    weights_used: &WeightsUsed,
    global: &ModelVector,
) -> ModelVector {
    match scheme {
        SchemeConfig::IdealOrthogonal => global.clone(),
        SchemeConfig::LocalCsit { .. } | SchemeConfig::GlobalCsit { .. } => {
            if outcome_active.is_empty() {
                global.clone()
            } else {
                let w = 1.0 / outcome_active.len() as f64;
                let mut t = ModelVector::zeros(models[0].dim());
                for &k in outcome_active {
                    t.add_scaled(&models[k], w);
                }
                t
            }
        }
        SchemeConfig::FullyBlind | SchemeConfig::PartialPhaseBlind => {
            let w = 1.0 / models.len() as f64;
            let mut t = ModelVector::zeros(models[0].dim());
            for m in models {
                t.add_scaled(m, w);
            }
            t
        }
        SchemeConfig::Wafel { .. } => match weights_used {
            WeightsUsed::Weighted(alpha) => weighted_sum(models, alpha.as_slice()),
            WeightsUsed::UniformOverActive => {
                let w = 1.0 / models.len() as f64;
                let mut t = ModelVector::zeros(models[0].dim());
                for m in models {
                    t.add_scaled(m, w);
                }
                t
            }
        },
    }
}

/// The initial global model of a run driven by `stream`; the same
/// derivation the training loop uses, exposed so post-hoc analyses can
/// recover `w_G^0`.
pub fn repetition_initial_model(task: &FederatedTask, stream: RngStream) -> ModelVector {
    task.init_model(stream.substream(TAG_INIT))
}

/// Run FedAvg with the given aggregation scheme.
///
/// Per round: every device takes `tau` local SGD steps from the broadcast
/// model, a fresh channel and noise realization is drawn, the scheme
/// aggregates, and diagnostics are recorded. The stream argument scopes one
/// repetition: schemes called with the same stream observe identical draws.
pub fn run_federated_training(
    task: &FederatedTask,
    scheme: &SchemeConfig,
    wireless: &WirelessConfig,
    training: &TrainingConfig,
    het: Option<&HeterogeneityProfile>,
    stream: RngStream,
) -> Result<TrainingOutput> {
    let (out, failure) =
        run_federated_training_resilient(task, scheme, wireless, training, het, stream)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Like [`run_federated_training`], but a mid-run scheme failure returns the
/// rounds completed so far together with the error instead of discarding
/// them. Configuration problems still fail fast.
pub fn run_federated_training_resilient(
    task: &FederatedTask,
    scheme: &SchemeConfig,
    wireless: &WirelessConfig,
    training: &TrainingConfig,
    het: Option<&HeterogeneityProfile>,
    stream: RngStream,
) -> Result<(TrainingOutput, Option<Error>)> {
    training.validate()?;
    wireless.validate()?;
    scheme.validate(wireless.antennas)?;
    let k = task.device_count();
    if k == 0 {
        return Err(Error::invalid("task has no devices"));
    }
    if let Some(profile) = het {
        if profile.batch_sizes.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "heterogeneity profile covers {} devices, task has {k}",
                profile.batch_sizes.len()
            )));
        }
    }

    let mut global = task.init_model(stream.substream(TAG_INIT));
    let mut trajectory = Vec::with_capacity(training.rounds + 1);
    trajectory.push(global.clone());
    let mut rounds = Vec::with_capacity(training.rounds);
    let mut failure = None;

    for t in 0..training.rounds {
        match run_one_round(
            task, scheme, wireless, training, het, stream, t, &global,
        ) {
            Ok((log, next_global)) => {
                global = next_global;
                rounds.push(log);
                trajectory.push(global.clone());
            }
            Err(e) => {
                failure = Some(e.in_round(t, scheme.id()));
                break;
            }
        }
    }

    Ok((
        TrainingOutput {
            rounds,
            trajectory,
            final_model: global,
        },
        failure,
    ))
}

#[allow(clippy::too_many_arguments)]
fn run_one_round(
    task: &FederatedTask,
    scheme: &SchemeConfig,
    wireless: &WirelessConfig,
    training: &TrainingConfig,
    het: Option<&HeterogeneityProfile>,
    stream: RngStream,
    t: usize,
    global: &ModelVector,
) -> Result<(RoundLog, ModelVector)> {
    let k = task.device_count();
    let dim = task.model_dim();
    let mu = training.lr.rate(t);
    let grad_norm_sq = task.global_gradient(global)?.norm_sq();

    // local updates
    let sgd_round = stream.substream(TAG_SGD).substream(t as u64);
    let mut locals = Vec::with_capacity(k);
    for dev in 0..k {
        let batch = het.map(|p| p.batch_sizes[dev]).unwrap_or(training.batch);
        let updated = local_sgd(
            global,
            &task.devices[dev],
            task.loss,
            mu,
            training.local_steps,
            batch,
            sgd_round.substream(dev as u64),
        )?;
        locals.push(updated);
    }

    // fresh wireless round
    let channel = wireless.channel.draw(
        stream.substream(TAG_CHANNEL).substream(t as u64),
        k,
        wireless.antennas,
    )?;
    let noise = draw_round_noise(
        stream.substream(TAG_NOISE).substream(t as u64),
        dim,
        wireless.antennas,
        &wireless.noise,
    )?;
    let csi = match scheme.required_csi() {
        Some(CsiKind::LocalCsit) => CsiView::LocalCsit,
        Some(CsiKind::GlobalCsit) => CsiView::GlobalCsit,
        Some(CsiKind::PartialPhase) => make_partial_phase_view(
            stream.substream(TAG_PHASE).substream(t as u64),
            &channel,
            wireless.phase_error_bound,
        )?,
        Some(CsiKind::CsirOnly) | None => CsiView::CsirOnly,
    };

    let input = AggregationInput {
        local_models: &locals,
        channel: &channel,
        csi: &csi,
        noise: &noise,
        power_budget: wireless.power,
        noise_variance: wireless.noise.sigma_z2,
    };
    let outcome = aggregate_round(scheme, &input, global, het)?;

    let target = scheme_target(
        scheme,
        &locals,
        &outcome.active_set,
        &outcome.weights_used,
        &outcome.global_model,
    );
    let agg_error = outcome.global_model.distance(&target);
    let weight_norm = outcome
        .weights_used
        .norm_sq(outcome.active_set.len())
        .sqrt();

    let next_global = outcome.global_model;
    let train_loss = task.global_loss(&next_global)?;
    let log = RoundLog {
        round: t,
        train_loss,
        test_loss: task.test_loss(&next_global),
        test_accuracy: task.test_accuracy(&next_global),
        agg_error,
        predicted_mse: outcome.predicted_mse,
        active_set_size: outcome.active_set.len(),
        weight_norm,
        flags: outcome.flags,
        global_grad_norm_sq: grad_norm_sq,
        channel_fingerprint: channel.fingerprint(),
    };
    Ok((log, next_global))
}
