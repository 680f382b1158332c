//! Experiment configuration: one canonical TOML format, strict about
//! unknown keys, validated as a whole so every problem is reported at once.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelModel, InterferenceConfig, NoiseConfig};
use crate::error::{Error, Result};
use crate::learning::{
    assign_heterogeneous_batches, generate_synthetic_task, FederatedTask, HeterogeneityProfile,
    LossKind, LrSchedule, TrainingConfig, WirelessConfig,
};
use crate::numerics::RngStream;
use crate::schemes::{SchemeConfig, WafelWeightRule};

fn default_repetitions() -> usize {
    20
}
fn default_output() -> String {
    "out".to_string()
}
fn default_classes_per_device() -> usize {
    2
}
fn default_hidden() -> usize {
    16
}
fn default_test_samples() -> usize {
    2000
}
fn default_lr_schedule() -> String {
    "constant".to_string()
}
fn default_channel_model() -> String {
    "rayleigh".to_string()
}
fn default_sigma_h2() -> f64 {
    1.0
}
fn default_antennas() -> usize {
    1
}
fn default_phase_error_bound() -> f64 {
    std::f64::consts::FRAC_PI_4
}

/// The configuration file as written, with defaults materialized.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_output")]
    pub output: String,
    pub task: RawTask,
    pub training: RawTraining,
    #[serde(default)]
    pub channel: RawChannel,
    pub noise: RawNoise,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneity: Option<RawHeterogeneity>,
    pub schemes: Vec<RawScheme>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTask {
    pub loss: String,
    pub devices: usize,
    pub classes: usize,
    pub dim: usize,
    pub samples_per_device: usize,
    #[serde(default = "default_classes_per_device")]
    pub classes_per_device: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_test_samples")]
    pub test_samples: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTraining {
    pub rounds: usize,
    pub local_steps: usize,
    pub batch: usize,
    pub lr: f64,
    #[serde(default = "default_lr_schedule")]
    pub lr_schedule: String,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawChannel {
    #[serde(default = "default_channel_model")]
    pub model: String,
    #[serde(default = "default_sigma_h2")]
    pub sigma_h2: f64,
    #[serde(default = "default_antennas")]
    pub antennas: usize,
    #[serde(default = "default_phase_error_bound")]
    pub phase_error_bound: f64,
}

impl Default for RawChannel {
    fn default() -> Self {
        RawChannel {
            model: default_channel_model(),
            sigma_h2: default_sigma_h2(),
            antennas: default_antennas(),
            phase_error_bound: default_phase_error_bound(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_z2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interference: Option<RawInterference>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawInterference {
    pub alpha: f64,
    pub delta: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawHeterogeneity {
    pub speeds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_ref: Option<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawScheme {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Truncation threshold (local CSIT).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Selection budget (global CSIT).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_threshold: Option<f64>,
    /// Weight-MSE budget (weighted aggregation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse_budget: Option<f64>,
    /// "optimized" or "uniform" (weighted aggregation).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heterogeneous: Option<bool>,
}

/// Shape of the synthetic task, kept so repetitions can rebuild it.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskSpec {
    pub loss: LossKind,
    pub devices: usize,
    pub classes: usize,
    pub dim: usize,
    pub samples_per_device: usize,
    pub classes_per_device: usize,
    pub test_samples: usize,
}

impl TaskSpec {
    pub fn build(&self, stream: RngStream) -> Result<FederatedTask> {
        generate_synthetic_task(
            stream,
            self.devices,
            self.classes,
            self.dim,
            self.samples_per_device,
            self.classes_per_device,
            self.loss,
            self.test_samples,
        )
    }
}

/// A fully validated experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub repetitions: usize,
    pub output: PathBuf,
    pub task: TaskSpec,
    pub training: TrainingConfig,
    pub wireless: WirelessConfig,
    pub heterogeneity: Option<HeterogeneityProfile>,
    /// `(unique label, scheme)` in file order.
    pub schemes: Vec<(String, SchemeConfig)>,
    raw: RawConfig,
}

impl ExperimentConfig {
    /// The normalized configuration (defaults filled), for echoing next to
    /// the outputs.
    pub fn resolved_toml(&self) -> String {
        toml::to_string_pretty(&self.raw).expect("raw config serializes")
    }
}

/// Parse and fully validate a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Parse and fully validate configuration text.
///
/// Syntax problems and unknown keys surface as parse errors; everything
/// semantic is collected and reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig> {
    let mut problems: Vec<String> = Vec::new();

    if raw.repetitions == 0 {
        problems.push("repetitions: must be at least 1".into());
    }

    // task
    let loss = match raw.task.loss.as_str() {
        "least_squares" => Some(LossKind::LeastSquares),
        "logistic" => Some(LossKind::Logistic),
        "perceptron" => {
            if raw.task.hidden == 0 {
                problems.push("task.hidden: perceptron needs at least one hidden unit".into());
            }
            Some(LossKind::Perceptron {
                hidden: raw.task.hidden,
            })
        }
        other => {
            problems.push(format!(
                "task.loss: unknown loss '{other}' (expected least_squares, logistic, or perceptron)"
            ));
            None
        }
    };
    if raw.task.devices == 0 {
        problems.push("task.devices: must be at least 1".into());
    }
    if raw.task.classes < 2 {
        problems.push("task.classes: need at least two classes".into());
    }
    if raw.task.dim == 0 {
        problems.push("task.dim: must be at least 1".into());
    }
    if raw.task.samples_per_device == 0 {
        problems.push("task.samples_per_device: must be at least 1".into());
    }
    if raw.task.classes_per_device == 0 || raw.task.classes_per_device > raw.task.classes {
        problems.push(format!(
            "task.classes_per_device: must lie in 1..={}, got {}",
            raw.task.classes, raw.task.classes_per_device
        ));
    }
    if raw.task.test_samples == 0 {
        problems.push("task.test_samples: must be at least 1".into());
    }

    // training
    if raw.training.rounds == 0 {
        problems.push("training.rounds: must be at least 1".into());
    }
    if raw.training.local_steps == 0 {
        problems.push("training.local_steps: must be at least 1".into());
    }
    if raw.training.batch == 0 {
        problems.push("training.batch: must be at least 1".into());
    }
    if !raw.training.lr.is_finite() || raw.training.lr <= 0.0 {
        problems.push(format!(
            "training.lr: must be positive, got {}",
            raw.training.lr
        ));
    }
    let lr = match raw.training.lr_schedule.as_str() {
        "constant" => Some(LrSchedule::Constant(raw.training.lr)),
        "diminishing" => Some(LrSchedule::Diminishing {
            theta: raw.training.lr,
        }),
        other => {
            problems.push(format!(
                "training.lr_schedule: unknown schedule '{other}' (expected constant or diminishing)"
            ));
            None
        }
    };

    // channel
    let channel_model = match raw.channel.model.as_str() {
        "rayleigh" => {
            if !raw.channel.sigma_h2.is_finite() || raw.channel.sigma_h2 <= 0.0 {
                problems.push(format!(
                    "channel.sigma_h2: must be positive, got {}",
                    raw.channel.sigma_h2
                ));
            }
            Some(ChannelModel::Rayleigh {
                sigma_h2: raw.channel.sigma_h2,
            })
        }
        "unit" => Some(ChannelModel::Unit),
        other => {
            problems.push(format!(
                "channel.model: unknown model '{other}' (expected rayleigh or unit)"
            ));
            None
        }
    };
    if raw.channel.antennas == 0 {
        problems.push("channel.antennas: must be at least 1".into());
    }
    if !raw.channel.phase_error_bound.is_finite()
        || raw.channel.phase_error_bound < 0.0
        || raw.channel.phase_error_bound >= std::f64::consts::FRAC_PI_2
    {
        problems.push(format!(
            "channel.phase_error_bound: must lie in [0, pi/2), got {}",
            raw.channel.phase_error_bound
        ));
    }

    // noise: power and sigma_z2 explicit, or resolved from SNR with
    // sigma_z2 = 1
    let (power, sigma_z2) = match (raw.noise.power, raw.noise.sigma_z2, raw.noise.snr) {
        (Some(p), Some(s), maybe_snr) => {
            if let Some(snr) = maybe_snr {
                if s > 0.0 && (snr - p / s).abs() > 1e-9 * snr.abs().max(1.0) {
                    problems.push(format!(
                        "noise.snr: inconsistent with power/sigma_z2 ({} vs {})",
                        snr,
                        p / s
                    ));
                }
            }
            (p, s)
        }
        (None, None, Some(snr)) => {
            if !snr.is_finite() || snr <= 0.0 {
                problems.push(format!("noise.snr: must be positive, got {snr}"));
            }
            (snr, 1.0)
        }
        (Some(p), None, Some(snr)) => (p, p / snr.max(1e-300)),
        (None, Some(s), Some(snr)) => (snr * s, s),
        (p, s, None) => {
            problems.push("noise: set snr, or power together with sigma_z2".into());
            (p.unwrap_or(1.0), s.unwrap_or(1.0))
        }
    };
    if !power.is_finite() || power <= 0.0 {
        problems.push(format!("noise: resolved power must be positive, got {power}"));
    }
    if !sigma_z2.is_finite() || sigma_z2 < 0.0 {
        problems.push(format!(
            "noise: resolved sigma_z2 must be >= 0, got {sigma_z2}"
        ));
    }
    let interference = raw.noise.interference.map(|i| InterferenceConfig {
        alpha: i.alpha,
        delta: i.delta,
    });
    let noise_cfg = NoiseConfig {
        sigma_z2,
        interference,
    };
    if let Err(e) = noise_cfg.validate() {
        problems.push(format!("noise: {e}"));
    }

    // heterogeneity
    let heterogeneity = match &raw.heterogeneity {
        Some(h) => {
            if h.speeds.len() != raw.task.devices {
                problems.push(format!(
                    "heterogeneity.speeds: {} entries for {} devices",
                    h.speeds.len(),
                    raw.task.devices
                ));
                None
            } else {
                match assign_heterogeneous_batches(
                    &h.speeds,
                    h.batch_ref.unwrap_or(raw.training.batch),
                ) {
                    Ok(profile) => Some(profile),
                    Err(e) => {
                        problems.push(format!("heterogeneity: {e}"));
                        None
                    }
                }
            }
        }
        None => None,
    };

    // schemes
    if raw.schemes.is_empty() {
        problems.push("schemes: need at least one scheme".into());
    }
    let mut schemes = Vec::new();
    let mut labels_seen = std::collections::BTreeSet::new();
    for (i, entry) in raw.schemes.iter().enumerate() {
        let label = entry.label.clone().unwrap_or_else(|| entry.kind.clone());
        if !labels_seen.insert(label.clone()) {
            problems.push(format!(
                "schemes[{i}]: duplicate label '{label}' (set a unique label)"
            ));
        }
        let scheme = match entry.kind.as_str() {
            "ideal" => Some(SchemeConfig::IdealOrthogonal),
            "local_csit" => match entry.threshold {
                Some(t) => Some(SchemeConfig::LocalCsit {
                    truncation_threshold: t,
                }),
                None => {
                    problems.push(format!("schemes[{i}]: local_csit needs 'threshold'"));
                    None
                }
            },
            "global_csit" => match entry.selection_threshold {
                Some(t) => Some(SchemeConfig::GlobalCsit {
                    selection_threshold: t,
                }),
                None => {
                    problems
                        .push(format!("schemes[{i}]: global_csit needs 'selection_threshold'"));
                    None
                }
            },
            "fully_blind" => Some(SchemeConfig::FullyBlind),
            "partial_phase" => Some(SchemeConfig::PartialPhaseBlind),
            "wafel" => {
                let rule = match entry.weights.as_deref().unwrap_or("optimized") {
                    "optimized" => Some(WafelWeightRule::Optimized),
                    "uniform" => Some(WafelWeightRule::Uniform),
                    other => {
                        problems.push(format!(
                            "schemes[{i}]: unknown weights rule '{other}' (expected optimized or uniform)"
                        ));
                        None
                    }
                };
                let heterogeneous = entry.heterogeneous.unwrap_or(false);
                if heterogeneous && raw.heterogeneity.is_none() {
                    problems.push(format!(
                        "schemes[{i}]: heterogeneous wafel needs a [heterogeneity] section"
                    ));
                }
                match (entry.mse_budget, rule) {
                    (Some(budget), Some(weight_rule)) => Some(SchemeConfig::Wafel {
                        mse_budget: budget,
                        weight_rule,
                        heterogeneous,
                    }),
                    (None, _) => {
                        problems.push(format!("schemes[{i}]: wafel needs 'mse_budget'"));
                        None
                    }
                    _ => None,
                }
            }
            other => {
                problems.push(format!("schemes[{i}]: unknown scheme kind '{other}'"));
                None
            }
        };
        if let Some(s) = scheme {
            if let Err(e) = s.validate(raw.channel.antennas) {
                problems.push(format!("schemes[{i}] ({label}): {e}"));
            }
            schemes.push((label, s));
        }
    }

    // weights rule / unused-field sanity: warn-as-error for fields that do
    // not belong to the kind, to keep configs honest
    for (i, entry) in raw.schemes.iter().enumerate() {
        let unused = match entry.kind.as_str() {
            "local_csit" => {
                entry.selection_threshold.is_some()
                    || entry.mse_budget.is_some()
                    || entry.weights.is_some()
                    || entry.heterogeneous.is_some()
            }
            "global_csit" => {
                entry.threshold.is_some()
                    || entry.mse_budget.is_some()
                    || entry.weights.is_some()
                    || entry.heterogeneous.is_some()
            }
            "wafel" => entry.threshold.is_some() || entry.selection_threshold.is_some(),
            "ideal" | "fully_blind" | "partial_phase" => {
                entry.threshold.is_some()
                    || entry.selection_threshold.is_some()
                    || entry.mse_budget.is_some()
                    || entry.weights.is_some()
                    || entry.heterogeneous.is_some()
            }
            _ => false,
        };
        if unused {
            problems.push(format!(
                "schemes[{i}]: parameters set that '{}' does not accept",
                entry.kind
            ));
        }
    }

    if !problems.is_empty() {
        return Err(Error::ConfigValidation(problems));
    }

    let task = TaskSpec {
        loss: loss.expect("validated"),
        devices: raw.task.devices,
        classes: raw.task.classes,
        dim: raw.task.dim,
        samples_per_device: raw.task.samples_per_device,
        classes_per_device: raw.task.classes_per_device,
        test_samples: raw.task.test_samples,
    };
    let training = TrainingConfig {
        lr: lr.expect("validated"),
        local_steps: raw.training.local_steps,
        rounds: raw.training.rounds,
        batch: raw.training.batch,
    };
    let wireless = WirelessConfig {
        channel: channel_model.expect("validated"),
        antennas: raw.channel.antennas,
        noise: noise_cfg,
        power,
        phase_error_bound: raw.channel.phase_error_bound,
    };
    // normalize the echoed config: materialize the noise resolution
    let mut raw_norm = raw;
    raw_norm.noise.power = Some(power);
    raw_norm.noise.sigma_z2 = Some(sigma_z2);

    Ok(ExperimentConfig {
        seed: raw_norm.seed,
        repetitions: raw_norm.repetitions,
        output: PathBuf::from(&raw_norm.output),
        task,
        training,
        wireless,
        heterogeneity,
        schemes,
        raw: raw_norm,
    })
}
