//! The over-the-air aggregation schemes behind one interface.
//!
//! Every scheme consumes the same inputs — local models, a channel
//! realization, a CSI view, drawn noise, and a power budget — and produces a
//! global model estimate plus diagnostics. Model entries ride the real part
//! of each complex symbol; the server takes the real part after equalization.
//! (An I/Q-packed mapping would halve channel uses but is out of scope here.)
//!
//! All entry points are deterministic given their inputs, so schemes run on
//! identical draws are exactly paired.

mod blind;
mod csit;
mod wafel;

pub use blind::{
    fully_blind_aggregate, min_antennas_bound, min_antennas_bound_raw,
    partial_phase_blind_aggregate,
};
pub use csit::{
    expected_power_check, global_csit_aggregate, local_csit_aggregate, predicted_mse_global,
    truncated_precoder,
};
pub use wafel::{
    stacked_compensated_channel, wafel_aggregate, wafel_equalizer, wafel_predicted_mse,
    wafel_weight_problem,
};

use num_complex::Complex64;

use crate::channel::{ChannelRealization, CsiKind, CsiView, RoundNoise};
use crate::error::{Error, Result};
use crate::learning::{ideal_orthogonal_aggregate, HeterogeneityProfile, ModelVector};
use crate::optim::{mp_greedy_selection, solve_weight_selection, WeightStatus, WeightVector};

/// Standard deviations below this are clamped before dividing; the numerator
/// is exactly zero in the all-constant case, so reconstruction stays exact.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Equalization vector applied at the server.
#[derive(Clone, Debug, PartialEq)]
pub enum Equalizer {
    /// One complex weight per antenna (CSIT-aware and blind designs).
    Antenna(Vec<Complex64>),
    /// Two real weights over the stacked real/imaginary receive dimensions
    /// (weighted aggregation).
    Stacked([f64; 2]),
}

impl Equalizer {
    pub fn antenna_weights(&self) -> Result<&[Complex64]> {
        match self {
            Equalizer::Antenna(b) => Ok(b),
            Equalizer::Stacked(_) => Err(Error::invalid(
                "expected an antenna-domain equalizer, found a stacked one",
            )),
        }
    }

    pub fn stacked_weights(&self) -> Result<[f64; 2]> {
        match self {
            Equalizer::Stacked(b) => Ok(*b),
            Equalizer::Antenna(_) => Err(Error::invalid(
                "expected a stacked equalizer, found an antenna-domain one",
            )),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        match self {
            Equalizer::Antenna(b) => b.iter().map(|z| z.norm_sqr()).sum(),
            Equalizer::Stacked(b) => b[0] * b[0] + b[1] * b[1],
        }
    }
}

/// Everything a scheme needs for one aggregation round.
#[derive(Clone, Copy, Debug)]
pub struct AggregationInput<'a> {
    pub local_models: &'a [ModelVector],
    pub channel: &'a ChannelRealization,
    pub csi: &'a CsiView,
    pub noise: &'a RoundNoise,
    /// Per-device transmit power budget P.
    pub power_budget: f64,
    /// Variance of the complex AWGN the noise block was drawn with; the
    /// MMSE equalizer needs it.
    pub noise_variance: f64,
}

impl<'a> AggregationInput<'a> {
    pub fn validate(&self) -> Result<()> {
        let k = self.channel.devices();
        if self.local_models.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "{} local models for {k} channel rows",
                self.local_models.len()
            )));
        }
        let dim = self
            .local_models
            .first()
            .ok_or_else(|| Error::invalid("need at least one local model"))?
            .dim();
        if self.local_models.iter().any(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch(
                "local models must share one dimension".into(),
            ));
        }
        if self.noise.symbols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "noise block covers {} symbols for model dimension {dim}",
                self.noise.symbols()
            )));
        }
        if self.noise.antennas() != self.channel.antennas() {
            return Err(Error::DimensionMismatch(format!(
                "noise drawn for {} antennas, channel has {}",
                self.noise.antennas(),
                self.channel.antennas()
            )));
        }
        if !self.power_budget.is_finite() || self.power_budget <= 0.0 {
            return Err(Error::invalid(format!(
                "power budget must be positive, got {}",
                self.power_budget
            )));
        }
        if !self.noise_variance.is_finite() || self.noise_variance < 0.0 {
            return Err(Error::invalid(format!(
                "noise variance must be >= 0, got {}",
                self.noise_variance
            )));
        }
        if let CsiView::PartialPhase { phase_estimates, .. } = self.csi {
            if phase_estimates.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} phase estimates for {k} devices",
                    phase_estimates.len()
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn require_csi(&self, kind: CsiKind, scheme: &str) -> Result<()> {
        if self.csi.kind() != kind {
            return Err(Error::invalid(format!(
                "{scheme} requires a {kind:?} view, got {:?}",
                self.csi.kind()
            )));
        }
        Ok(())
    }

    pub(crate) fn require_single_antenna(&self, scheme: &str) -> Result<()> {
        if self.channel.antennas() != 1 {
            return Err(Error::UnsupportedConfiguration(format!(
                "{scheme} is limited to a single-antenna server, got M = {}",
                self.channel.antennas()
            )));
        }
        Ok(())
    }

    pub fn model_dim(&self) -> usize {
        self.local_models.first().map_or(0, ModelVector::dim)
    }
}

/// Aggregation weights actually applied by a scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightsUsed {
    /// Plain average over the active set.
    UniformOverActive,
    Weighted(WeightVector),
}

impl WeightsUsed {
    /// Squared Euclidean norm of the effective weight vector.
    pub fn norm_sq(&self, active_len: usize) -> f64 {
        match self {
            WeightsUsed::UniformOverActive => {
                if active_len == 0 {
                    0.0
                } else {
                    1.0 / active_len as f64
                }
            }
            WeightsUsed::Weighted(w) => w.norm_sq(),
        }
    }
}

/// Per-round condition flags surfaced in the experiment records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OutcomeFlags {
    /// No device passed selection; the previous global model was carried
    /// forward unchanged.
    pub empty_active_set: bool,
    /// The weight solver could not meet its MSE budget and fell back to the
    /// minimum-MSE weights.
    pub solver_fallback: bool,
}

impl OutcomeFlags {
    pub fn any(&self) -> bool {
        self.empty_active_set || self.solver_fallback
    }

    pub fn tokens(&self) -> Vec<&'static str> {
        let mut t = Vec::new();
        if self.empty_active_set {
            t.push("empty_active_set");
        }
        if self.solver_fallback {
            t.push("solver_fallback");
        }
        t
    }
}

/// Result of one aggregation round.
#[derive(Clone, Debug)]
pub struct AggregationOutcome {
    pub global_model: ModelVector,
    /// Participating devices, ascending.
    pub active_set: Vec<usize>,
    pub weights_used: WeightsUsed,
    /// Closed-form MSE prediction where the scheme has one, in that scheme's
    /// own normalization.
    pub predicted_mse: Option<f64>,
    pub flags: OutcomeFlags,
}

impl AggregationOutcome {
    pub(crate) fn carry_forward(prev_global: &ModelVector) -> Self {
        AggregationOutcome {
            global_model: prev_global.clone(),
            active_set: Vec::new(),
            weights_used: WeightsUsed::UniformOverActive,
            predicted_mse: None,
            flags: OutcomeFlags {
                empty_active_set: true,
                solver_fallback: false,
            },
        }
    }
}

/// Per-device normalization statistics, recomputed every round.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizationStats {
    /// Entry means.
    pub eta: Vec<f64>,
    /// Entry population standard deviations, >= 0.
    pub sigma: Vec<f64>,
}

pub fn normalization_stats(models: &[ModelVector]) -> NormalizationStats {
    let (eta, sigma) = models.iter().map(ModelVector::entry_stats).unzip();
    NormalizationStats { eta, sigma }
}

impl NormalizationStats {
    /// `(mean eta, mean sigma)` over a device subset.
    pub fn means_over(&self, subset: &[usize]) -> (f64, f64) {
        let n = subset.len() as f64;
        let eta = subset.iter().map(|&k| self.eta[k]).sum::<f64>() / n;
        let sigma = subset.iter().map(|&k| self.sigma[k]).sum::<f64>() / n;
        (eta, sigma)
    }
}

/// Scheme selection with per-scheme parameters; system-level quantities
/// (power, noise, antennas, phase-error bound) are shared so that schemes
/// compare on identical draws.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeConfig {
    /// Error-free orthogonal aggregation; the learning-side reference.
    IdealOrthogonal,
    /// Truncated channel inversion with threshold `theta` on `|h|^2`.
    LocalCsit { truncation_threshold: f64 },
    /// Greedy device selection with budget `theta` on
    /// `max ||b||^2 / |b^H h_k|^2`.
    GlobalCsit { selection_threshold: f64 },
    /// Massive-antenna statistical equalization, no device preprocessing.
    FullyBlind,
    /// Quadrant phase compensation only; the channel imposes the weights.
    PartialPhaseBlind,
    /// Weighted aggregation with an MMSE equalizer.
    Wafel {
        /// Budget on the weight-MSE quadratic form (without the model
        /// dimension factor).
        mse_budget: f64,
        weight_rule: WafelWeightRule,
        /// Use inverse batch sizes as the objective diagonal.
        heterogeneous: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WafelWeightRule {
    /// Fixed uniform weights (no optimization).
    Uniform,
    /// Solve the norm-minimization problem each round.
    Optimized,
}

impl SchemeConfig {
    pub fn id(&self) -> &'static str {
        match self {
            SchemeConfig::IdealOrthogonal => "ideal",
            SchemeConfig::LocalCsit { .. } => "local_csit",
            SchemeConfig::GlobalCsit { .. } => "global_csit",
            SchemeConfig::FullyBlind => "fully_blind",
            SchemeConfig::PartialPhaseBlind => "partial_phase",
            SchemeConfig::Wafel { .. } => "wafel",
        }
    }

    /// The CSI view this scheme must be constructed with; `None` for the
    /// ideal reference, which bypasses the channel.
    pub fn required_csi(&self) -> Option<CsiKind> {
        match self {
            SchemeConfig::IdealOrthogonal => None,
            SchemeConfig::LocalCsit { .. } => Some(CsiKind::LocalCsit),
            SchemeConfig::GlobalCsit { .. } => Some(CsiKind::GlobalCsit),
            SchemeConfig::FullyBlind => Some(CsiKind::CsirOnly),
            SchemeConfig::PartialPhaseBlind | SchemeConfig::Wafel { .. } => {
                Some(CsiKind::PartialPhase)
            }
        }
    }

    pub fn requires_single_antenna(&self) -> bool {
        matches!(
            self,
            SchemeConfig::LocalCsit { .. }
                | SchemeConfig::PartialPhaseBlind
                | SchemeConfig::Wafel { .. }
        )
    }

    /// Static validation against the system configuration.
    pub fn validate(&self, antennas: usize) -> Result<()> {
        if self.requires_single_antenna() && antennas != 1 {
            return Err(Error::UnsupportedConfiguration(format!(
                "scheme '{}' is limited to a single-antenna server, got M = {antennas}",
                self.id()
            )));
        }
        match *self {
            SchemeConfig::LocalCsit {
                truncation_threshold,
            } if !(truncation_threshold.is_finite() && truncation_threshold > 0.0) => {
                Err(Error::invalid(format!(
                    "truncation threshold must be positive, got {truncation_threshold}"
                )))
            }
            SchemeConfig::GlobalCsit {
                selection_threshold,
            } if !(selection_threshold.is_finite() && selection_threshold > 0.0) => {
                Err(Error::invalid(format!(
                    "selection threshold must be positive, got {selection_threshold}"
                )))
            }
            SchemeConfig::Wafel { mse_budget, .. }
                if !(mse_budget.is_finite() && mse_budget > 0.0) =>
            {
                Err(Error::invalid(format!(
                    "MSE budget must be positive, got {mse_budget}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Run one aggregation round under the given scheme.
///
/// Handles the per-scheme orchestration: device selection for the global
/// CSIT scheme, weight selection for the weighted scheme, and carry-forward
/// of the previous global model whenever the active set comes back empty.
pub fn aggregate_round(
    cfg: &SchemeConfig,
    input: &AggregationInput,
    prev_global: &ModelVector,
    het: Option<&HeterogeneityProfile>,
) -> Result<AggregationOutcome> {
    match cfg {
        SchemeConfig::IdealOrthogonal => {
            let k = input.local_models.len();
            let weights = match het {
                Some(profile) => WeightVector::new(profile.weight_target.clone())?,
                None => WeightVector::uniform(k),
            };
            let global_model = ideal_orthogonal_aggregate(input.local_models, &weights)?;
            Ok(AggregationOutcome {
                global_model,
                active_set: (0..k).collect(),
                weights_used: WeightsUsed::Weighted(weights),
                predicted_mse: Some(0.0),
                flags: OutcomeFlags::default(),
            })
        }
        SchemeConfig::LocalCsit {
            truncation_threshold,
        } => local_csit_aggregate(input, *truncation_threshold, prev_global),
        SchemeConfig::GlobalCsit {
            selection_threshold,
        } => {
            let selection = mp_greedy_selection(
                input.channel,
                input.power_budget,
                input.noise_variance,
                *selection_threshold,
            )?;
            if selection.is_empty() {
                return Ok(AggregationOutcome::carry_forward(prev_global));
            }
            global_csit_aggregate(input, &selection, prev_global)
        }
        SchemeConfig::FullyBlind => fully_blind_aggregate(input, prev_global),
        SchemeConfig::PartialPhaseBlind => partial_phase_blind_aggregate(input, prev_global),
        SchemeConfig::Wafel {
            mse_budget,
            weight_rule,
            heterogeneous,
        } => {
            let k = input.local_models.len();
            let mut solver_fallback = false;
            let alpha = match weight_rule {
                WafelWeightRule::Uniform => WeightVector::uniform(k),
                WafelWeightRule::Optimized => {
                    let stats = normalization_stats(input.local_models);
                    let all: Vec<usize> = (0..k).collect();
                    let (_, sigma_bar) = stats.means_over(&all);
                    let scale = sigma_bar.max(SIGMA_FLOOR);
                    let h = stacked_compensated_channel(input.channel, input.csi)?;
                    let d = match (heterogeneous, het) {
                        (true, Some(profile)) => profile.noise_scale.clone(),
                        (true, None) => {
                            return Err(Error::invalid(
                                "heterogeneous weight selection needs a heterogeneity profile",
                            ))
                        }
                        (false, _) => vec![1.0; k],
                    };
                    let problem = wafel_weight_problem(
                        &vec![scale; k],
                        &h,
                        input.power_budget,
                        input.noise_variance / 2.0,
                        *mse_budget,
                        d,
                    )?;
                    let solution = solve_weight_selection(&problem)?;
                    solver_fallback = solution.status == WeightStatus::InfeasibleFallback;
                    solution.alpha
                }
            };
            let mut outcome = wafel_aggregate(input, &alpha, prev_global)?;
            outcome.flags.solver_fallback = solver_fallback;
            Ok(outcome)
        }
    }
}
