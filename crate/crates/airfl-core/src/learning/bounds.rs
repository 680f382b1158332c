//! Convergence-bound evaluators and empirical constant measurement.
//!
//! The FedAvg-style bounds (centralized CSIT and weighted aggregation, plus
//! the heterogeneity-aware variant) control the running average of squared
//! global gradient norms; the partial-phase bound is a decaying envelope on
//! the alpha-norm distance to the optimum under a diminishing step size.
//! Constants are never assumed: smoothness comes from the quadratic task's
//! Hessian, gradient variance from sampling, and the optimal loss from the
//! closed-form least-squares solution.

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::learning::losses::{gradient_on, LossKind};
use crate::learning::model::ModelVector;
use crate::learning::task::FederatedTask;
use crate::learning::training::{LrSchedule, TrainingConfig};
use crate::numerics::RngStream;

/// Constants entering the convergence bounds; user-supplied or measured.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundConstants {
    /// Gradient Lipschitz constant L.
    pub smoothness: f64,
    /// Gradient variance bound sigma_g^2 (per unit batch).
    pub gradient_variance: f64,
    /// Strong convexity gamma (only some bounds use it).
    pub strong_convexity: f64,
    /// Per-device gradient norm bound G.
    pub gradient_bound: f64,
    /// Bound C on the interference alpha-moment.
    pub interference_moment: f64,
    /// Mean of the compensated channel gain (omega).
    pub compensated_channel_mean: f64,
    /// Variance of the compensated channel gain.
    pub compensated_channel_var: f64,
    /// Positive constant of the blind-scheme antenna bound (gamma_n).
    pub blind_constant: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            smoothness: 1.0,
            gradient_variance: 1.0,
            strong_convexity: 1.0,
            gradient_bound: 1.0,
            interference_moment: 1.0,
            compensated_channel_mean: 1.0,
            compensated_channel_var: 1.0,
            blind_constant: 1.0,
        }
    }
}

/// Per-round series feeding the bound of each scheme family.
#[derive(Clone, Debug)]
pub enum PerRound {
    /// `(predicted MSE, active-set size)` per round.
    GlobalCsit(Vec<(f64, usize)>),
    /// `(predicted MSE, ||alpha||^2)` per round.
    Wafel(Vec<(f64, f64)>),
    /// `(predicted MSE, full weight vector)` per round, plus the inverse
    /// batch sizes b_s.
    WafelHet {
        rounds: Vec<(f64, Vec<f64>)>,
        batch_inverse: Vec<f64>,
    },
    /// The partial-phase scheme needs no per-round series, only the
    /// interference tail index and problem shape.
    PartialPhase {
        interference_alpha: f64,
        model_dim: usize,
        devices: usize,
    },
}

/// A bound value: a scalar cap on the averaged squared gradient norm, or a
/// per-round decay envelope.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Scalar(f64),
    Series(Vec<f64>),
}

impl BoundValue {
    pub fn scalar(&self) -> Option<f64> {
        match self {
            BoundValue::Scalar(v) => Some(*v),
            BoundValue::Series(_) => None,
        }
    }
}

fn fedavg_preconditions(constants: &BoundConstants, cfg: &TrainingConfig) -> Result<f64> {
    let mu = match cfg.lr {
        LrSchedule::Constant(mu) => mu,
        LrSchedule::Diminishing { .. } => {
            return Err(Error::Precondition(
                "the FedAvg-style bounds assume a constant learning rate".into(),
            ))
        }
    };
    let l = constants.smoothness;
    let tau = cfg.local_steps as f64;
    let condition = 1.0 - l * l * mu * mu / 2.0 * tau * (tau - 1.0) - l * mu * tau;
    if condition < 0.0 {
        return Err(Error::Precondition(format!(
            "step-size condition violated: 1 - L^2 mu^2 tau (tau-1)/2 - L mu tau = {condition}"
        )));
    }
    Ok(mu)
}

/// Evaluate a convergence bound.
///
/// For the FedAvg-style kinds the result caps
/// `(1/T) sum_t ||grad F(w_G^t)||^2`; `loss_initial` and `loss_optimal` are
/// `F(w_G^0)` and `F(w*)`. For the partial-phase kind the result is the
/// per-round envelope on the alpha-norm distance to the optimum, and the
/// loss arguments are ignored.
pub fn eval_convergence_bound(
    per_round: &PerRound,
    constants: &BoundConstants,
    cfg: &TrainingConfig,
    loss_initial: f64,
    loss_optimal: f64,
) -> Result<BoundValue> {
    cfg.validate()?;
    let l = constants.smoothness;
    if !l.is_finite() || l <= 0.0 {
        return Err(Error::invalid(format!(
            "smoothness constant must be positive, got {l}"
        )));
    }
    let tau = cfg.local_steps as f64;
    let t_rounds = cfg.rounds as f64;
    let batch = cfg.batch as f64;
    let sg2 = constants.gradient_variance;

    match per_round {
        PerRound::GlobalCsit(series) => {
            let mu = fedavg_preconditions(constants, cfg)?;
            if series.len() != cfg.rounds {
                return Err(Error::DimensionMismatch(format!(
                    "{} per-round entries for {} rounds",
                    series.len(),
                    cfg.rounds
                )));
            }
            let mut interference_sum = 0.0;
            for (t, &(mse, active)) in series.iter().enumerate() {
                if active == 0 {
                    return Err(Error::Precondition(format!(
                        "round {t} has an empty active set; the bound is undefined"
                    )));
                }
                interference_sum += mu * mu * sg2 / batch * tau / active as f64 + mse;
            }
            let bound = 2.0 * (loss_initial - loss_optimal) / (mu * tau * t_rounds)
                + l * l * mu * mu * (tau - 1.0) / 2.0 * sg2 / batch
                + l / (mu * tau * t_rounds) * interference_sum;
            Ok(BoundValue::Scalar(bound))
        }
        PerRound::Wafel(series) => {
            let mu = fedavg_preconditions(constants, cfg)?;
            if series.len() != cfg.rounds {
                return Err(Error::DimensionMismatch(format!(
                    "{} per-round entries for {} rounds",
                    series.len(),
                    cfg.rounds
                )));
            }
            let interference_sum: f64 = series
                .iter()
                .map(|&(mse, weight_norm_sq)| {
                    mu * mu * sg2 / batch * tau * weight_norm_sq + mse
                })
                .sum();
            let bound = 2.0 * (loss_initial - loss_optimal) / (mu * tau * t_rounds)
                + l * l * mu * mu * (tau - 1.0) / 2.0 * sg2 / batch
                + l / (mu * tau * t_rounds) * interference_sum;
            Ok(BoundValue::Scalar(bound))
        }
        PerRound::WafelHet {
            rounds,
            batch_inverse,
        } => {
            let mu = fedavg_preconditions(constants, cfg)?;
            if rounds.len() != cfg.rounds {
                return Err(Error::DimensionMismatch(format!(
                    "{} per-round entries for {} rounds",
                    rounds.len(),
                    cfg.rounds
                )));
            }
            let mut interference_sum = 0.0;
            for (mse, alpha) in rounds {
                if alpha.len() != batch_inverse.len() {
                    return Err(Error::DimensionMismatch(
                        "weight vector and batch-inverse lengths differ".into(),
                    ));
                }
                let linear: f64 = alpha.iter().zip(batch_inverse).map(|(a, b)| a * b).sum();
                let quadratic: f64 = alpha
                    .iter()
                    .zip(batch_inverse)
                    .map(|(a, b)| a * a * b)
                    .sum();
                interference_sum += l * mu.powi(3) * tau * (tau - 1.0) / 2.0 * sg2 * linear
                    + mu * mu * sg2 * tau * quadratic
                    + mse;
            }
            let bound = 2.0 * (loss_initial - loss_optimal) / (mu * tau * t_rounds)
                + l / (mu * tau * t_rounds) * interference_sum;
            Ok(BoundValue::Scalar(bound))
        }
        PerRound::PartialPhase {
            interference_alpha,
            model_dim,
            devices,
        } => {
            let alpha = *interference_alpha;
            if !(0.0 < alpha && alpha <= 2.0) {
                return Err(Error::invalid(format!(
                    "tail index must lie in (0, 2], got {alpha}"
                )));
            }
            let theta = match cfg.lr {
                LrSchedule::Diminishing { theta } => theta,
                LrSchedule::Constant(_) => {
                    return Err(Error::Precondition(
                        "the partial-phase bound assumes a diminishing learning rate".into(),
                    ))
                }
            };
            let omega = constants.compensated_channel_mean;
            let threshold = (alpha - 1.0) / (omega * l);
            if theta <= threshold {
                return Err(Error::Precondition(format!(
                    "diminishing-rate scale {theta} must exceed (alpha-1)/(omega L) = {threshold}"
                )));
            }
            let sigma = constants.compensated_channel_var.sqrt();
            let s = *model_dim as f64;
            let k = *devices as f64;
            let numerator = 4.0
                * theta.powf(alpha)
                * (constants.interference_moment
                    + sigma.powf(alpha)
                        * constants.gradient_bound.powf(alpha)
                        * s.powf(1.0 - 1.0 / alpha)
                        / k.powf(alpha / 2.0));
            let coefficient = numerator / (omega * theta * l - alpha + 1.0);
            let series = (1..=cfg.rounds)
                .map(|t| coefficient / (t as f64).powf(alpha - 1.0))
                .collect();
            Ok(BoundValue::Series(series))
        }
    }
}

/// Smoothness constant of the least-squares task: the largest eigenvalue of
/// the global Hessian, obtained by power iteration on the feature Gram
/// matrix. Only the quadratic family is supported.
pub fn measure_smoothness(task: &FederatedTask) -> Result<f64> {
    if task.loss != LossKind::LeastSquares {
        return Err(Error::UnsupportedConfiguration(
            "smoothness measurement is exact only for the least-squares task".into(),
        ));
    }
    let gram = feature_gram(task);
    let d = gram.nrows();
    let mut x = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut y = vec![0.0; d];
        for i in 0..d {
            for j in 0..d {
                y[i] += gram[(i, j)] * x[j];
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Ok(0.0);
        }
        lambda = norm;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    Ok(lambda)
}

/// Mean feature Gram matrix `(1/N) X~^T X~` with the bias coordinate
/// appended; the global least-squares Hessian is this matrix replicated per
/// class output.
fn feature_gram(task: &FederatedTask) -> Array2<f64> {
    let d = task.feature_dim + 1;
    let n = task.total_samples() as f64;
    let mut gram = Array2::zeros((d, d));
    for dev in &task.devices {
        for row in dev.features.rows() {
            let x = row.as_slice().expect("contiguous row");
            for i in 0..d {
                let xi = if i < task.feature_dim { x[i] } else { 1.0 };
                for j in i..d {
                    let xj = if j < task.feature_dim { x[j] } else { 1.0 };
                    gram[(i, j)] += xi * xj / n;
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
        }
    }
    gram
}

/// Closed-form least-squares optimum `(w*, F(w*))` via the normal equations.
pub fn least_squares_optimum(task: &FederatedTask) -> Result<(ModelVector, f64)> {
    if task.loss != LossKind::LeastSquares {
        return Err(Error::UnsupportedConfiguration(
            "closed-form optimum exists only for the least-squares task".into(),
        ));
    }
    let d = task.feature_dim + 1;
    let c = task.classes;
    let n = task.total_samples() as f64;
    let gram = feature_gram(task);
    // right-hand sides: (1/N) X~^T Y for each class column
    let mut rhs = vec![vec![0.0f64; c]; d];
    for dev in &task.devices {
        for (row, &label) in dev.features.rows().into_iter().zip(&dev.labels) {
            let x = row.as_slice().expect("contiguous row");
            for i in 0..d {
                let xi = if i < task.feature_dim { x[i] } else { 1.0 };
                rhs[i][label] += xi / n;
            }
        }
    }
    let chol = cholesky(&gram)?;
    let mut params = vec![0.0; d * c];
    for class in 0..c {
        let b: Vec<f64> = (0..d).map(|i| rhs[i][class]).collect();
        let w = chol_solve(&chol, &b);
        for (i, &wi) in w.iter().enumerate() {
            // feature weights input-major, bias last
            if i < task.feature_dim {
                params[i * c + class] = wi;
            } else {
                params[task.feature_dim * c + class] = wi;
            }
        }
    }
    let optimum = ModelVector::from_vec(params)?;
    let value = task.global_loss(&optimum)?;
    Ok((optimum, value))
}

fn cholesky(a: &Array2<f64>) -> Result<Vec<Vec<f64>>> {
    let n = a.nrows();
    let mut l = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::Precondition(
                        "feature Gram matrix is singular; the optimum is not unique".into(),
                    ));
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

/// Empirical gradient-variance constant: the largest, over probe points and
/// devices, of `B * E ||grad F_k(w; batch) - grad F(w)||^2`, estimated with
/// `draws` independent mini-batches per pair.
pub fn measure_gradient_variance(
    task: &FederatedTask,
    probes: &[ModelVector],
    batch: usize,
    draws: usize,
    stream: RngStream,
) -> Result<f64> {
    if probes.is_empty() || draws == 0 || batch == 0 {
        return Err(Error::invalid(
            "need probe points, draws, and a positive batch size",
        ));
    }
    let mut worst: f64 = 0.0;
    for (pi, probe) in probes.iter().enumerate() {
        let full = task.global_gradient(probe)?;
        for (dev, data) in task.devices.iter().enumerate() {
            let b = batch.min(data.len());
            let mut rng = stream
                .substream(pi as u64)
                .substream(dev as u64)
                .rng();
            let mut acc = 0.0;
            let mut indices: Vec<usize> = (0..data.len()).collect();
            for _ in 0..draws {
                indices.shuffle(&mut rng);
                let grad = gradient_on(
                    task.loss,
                    probe,
                    &data.features,
                    &data.labels,
                    Some(&indices[..b]),
                );
                let dist_sq: f64 = grad
                    .iter()
                    .zip(full.as_slice())
                    .map(|(g, f)| (g - f) * (g - f))
                    .sum();
                acc += dist_sq;
            }
            worst = worst.max(b as f64 * acc / draws as f64);
        }
    }
    Ok(worst)
}

/// Closed-form compensated-channel moments for Rayleigh fading with a
/// uniform phase error on `(-bound, bound)`:
/// mean `omega = sqrt(pi sigma_h^2)/2 * sin(bound)/bound` and the matching
/// variance.
pub fn compensated_channel_moments(sigma_h2: f64, bound: f64) -> (f64, f64) {
    let cos_mean = if bound == 0.0 { 1.0 } else { bound.sin() / bound };
    let mean_abs = (std::f64::consts::PI * sigma_h2).sqrt() / 2.0;
    let omega = mean_abs * cos_mean;
    let cos_sq_mean = if bound == 0.0 {
        1.0
    } else {
        0.5 * (1.0 + (2.0 * bound).sin() / (2.0 * bound))
    };
    let second = sigma_h2 * cos_sq_mean;
    (omega, second - omega * omega)
}
