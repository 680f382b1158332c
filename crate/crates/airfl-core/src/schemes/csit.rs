//! CSIT-aware aggregation: truncated channel inversion (local CSIT) and
//! centralized equalization with device selection (global CSIT).

use num_complex::Complex64;

use crate::channel::{ChannelRealization, CsiKind};
use crate::error::{Error, Result};
use crate::learning::ModelVector;
use crate::numerics::{exp_integral_upper, RngStream};
use crate::optim::SelectionResult;
use crate::schemes::{
    AggregationInput, AggregationOutcome, Equalizer, NormalizationStats, OutcomeFlags,
    WeightsUsed, normalization_stats, SIGMA_FLOOR,
};

/// Truncated channel inversion for one device.
///
/// Takes nothing but the device's own coefficient: devices below the gain
/// threshold stay silent, the rest invert magnitude and phase scaled by the
/// denormalizing factor `rho`.
pub fn truncated_precoder(h_k: Complex64, threshold: f64, rho: f64) -> Complex64 {
    let gain = h_k.norm_sqr();
    if gain >= threshold {
        rho.sqrt() * h_k.conj() / gain
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Aggregation with local CSIT: every device with `|h_k|^2 >= theta` inverts
/// its own channel; the single-antenna server rescales the received real
/// part by `1 / (sqrt(rho) |S|)`.
///
/// The denormalizing factor `rho = P / E1(theta)` makes the transmit power,
/// averaged over Rayleigh fading (silent rounds included), equal to `P`.
/// An empty active set returns `prev_global` unchanged with the
/// `empty_active_set` flag.
pub fn local_csit_aggregate(
    input: &AggregationInput,
    theta: f64,
    prev_global: &ModelVector,
) -> Result<AggregationOutcome> {
    input.validate()?;
    input.require_single_antenna("local CSIT aggregation")?;
    input.require_csi(CsiKind::LocalCsit, "local CSIT aggregation")?;
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::invalid(format!(
            "truncation threshold must be positive, got {theta}"
        )));
    }
    let rho = input.power_budget / exp_integral_upper(theta)?;
    let k_total = input.channel.devices();

    let mut active = Vec::new();
    let mut gains = Vec::new(); // effective end-to-end gain h_k * p_k
    for k in 0..k_total {
        let h_k = input.channel.coeff(k, 0);
        let p_k = truncated_precoder(h_k, theta, rho);
        if p_k.norm_sqr() > 0.0 {
            active.push(k);
            gains.push(h_k * p_k);
        }
    }
    if active.is_empty() {
        return Ok(AggregationOutcome::carry_forward(prev_global));
    }

    let dim = input.model_dim();
    let denom = rho.sqrt() * active.len() as f64;
    let mut estimate = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut y = input.noise.awgn[(0, i)];
        for (&k, &g) in active.iter().zip(&gains) {
            y += g * input.local_models[k].as_slice()[i];
        }
        estimate.push(y.re / denom);
    }

    Ok(AggregationOutcome {
        global_model: ModelVector::from_vec(estimate)?,
        active_set: active,
        weights_used: WeightsUsed::UniformOverActive,
        predicted_mse: None,
        flags: OutcomeFlags::default(),
    })
}

/// Monte-Carlo check of the truncated-power-control constraint: the average
/// of `|p_k|^2` over Rayleigh draws (zeros from silent devices included)
/// should equal the power budget `P`.
pub fn expected_power_check(
    stream: RngStream,
    theta: f64,
    power: f64,
    trials: usize,
) -> Result<f64> {
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::invalid(format!(
            "truncation threshold must be positive, got {theta}"
        )));
    }
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::invalid(format!("power must be positive, got {power}")));
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    let rho = power / exp_integral_upper(theta)?;
    let mut rng = stream.rng();
    let mut acc = 0.0;
    for _ in 0..trials {
        let re: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
        let im: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
        let h = Complex64::new(re / 2f64.sqrt(), im / 2f64.sqrt());
        acc += truncated_precoder(h, theta, rho).norm_sqr();
    }
    Ok(acc / trials as f64)
}

/// Closed-form MSE of the global-CSIT design on normalized symbols:
/// `(sigma_z2 / P) * max_{k in S} ||b||^2 / |b^H h_k|^2`.
///
/// Returns infinity when the equalizer is orthogonal to some active device.
pub fn predicted_mse_global(
    equalizer: &Equalizer,
    active: &[usize],
    channel: &ChannelRealization,
    power: f64,
    sigma_z2: f64,
) -> f64 {
    let b = match equalizer.antenna_weights() {
        Ok(b) => b,
        Err(_) => return f64::INFINITY,
    };
    let b_norm_sq: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let mut worst = 0.0f64;
    for &k in active {
        let row = channel.device_row(k);
        let inner: Complex64 = b.iter().zip(row.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
        let gain = inner.norm_sqr();
        if gain == 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(b_norm_sq / gain);
    }
    sigma_z2 / power * worst
}

/// Centralized aggregation with global CSIT.
///
/// Active devices remove their entry mean, divide by the shared scale
/// `sigma_bar` (the active-set average of per-device deviations), and invert
/// the equalized channel `b^H h_k` under the instantaneous power constraint
/// `|p_k|^2 <= P`; the server adds the mean back after equalizing. Using one
/// shared scale keeps the reconstruction exactly unbiased for heterogeneous
/// per-device spreads while leaving the noise analysis unchanged.
pub fn global_csit_aggregate(
    input: &AggregationInput,
    selection: &SelectionResult,
    prev_global: &ModelVector,
) -> Result<AggregationOutcome> {
    input.validate()?;
    input.require_csi(CsiKind::GlobalCsit, "global CSIT aggregation")?;
    if selection.is_empty() {
        return Err(Error::Precondition(
            "global CSIT aggregation needs a nonempty active set".into(),
        ));
    }
    let b = selection.equalizer.antenna_weights()?;
    let m = input.channel.antennas();
    if b.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "equalizer has {} weights for {m} antennas",
            b.len()
        )));
    }
    let active = &selection.active;
    if active.iter().any(|&k| k >= input.channel.devices()) {
        return Err(Error::invalid("active set indexes a missing device"));
    }
    let _ = prev_global;

    // rho = min_k P |b^H h_k|^2 and the per-device inversions
    let mut inner = Vec::with_capacity(active.len());
    let mut rho = f64::INFINITY;
    for &k in active {
        let row = input.channel.device_row(k);
        let bh: Complex64 = b.iter().zip(row.iter()).map(|(bi, hi)| bi.conj() * hi).sum();
        if bh.norm_sqr() == 0.0 {
            return Err(Error::DegenerateEqualizer(format!(
                "equalizer is orthogonal to device {k}"
            )));
        }
        rho = rho.min(input.power_budget * bh.norm_sqr());
        inner.push(bh);
    }
    let sqrt_rho = rho.sqrt();

    let stats: NormalizationStats = normalization_stats(input.local_models);
    let (eta_bar, sigma_bar) = stats.means_over(active);
    let scale = sigma_bar.max(SIGMA_FLOOR);

    // effective coefficient per device: (b^H h_k) p_k, exactly sqrt(rho)
    let coeff: Vec<Complex64> = inner
        .iter()
        .map(|bh| bh * (sqrt_rho * bh.conj() / bh.norm_sqr()))
        .collect();

    let dim = input.model_dim();
    let denom = sqrt_rho * active.len() as f64;
    let mut estimate = Vec::with_capacity(dim);
    for i in 0..dim {
        // b^H applied to the received column: signal part plus noise part
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &k) in active.iter().enumerate() {
            let normalized = (input.local_models[k].as_slice()[i] - stats.eta[k]) / scale;
            acc += coeff[idx] * normalized;
        }
        for antenna in 0..m {
            acc += b[antenna].conj() * input.noise.awgn[(antenna, i)];
        }
        estimate.push(scale * acc.re / denom + eta_bar);
    }

    let predicted = predicted_mse_global(
        &selection.equalizer,
        active,
        input.channel,
        input.power_budget,
        input.noise_variance,
    );

    Ok(AggregationOutcome {
        global_model: ModelVector::from_vec(estimate)?,
        active_set: active.clone(),
        weights_used: WeightsUsed::UniformOverActive,
        predicted_mse: Some(predicted),
        flags: OutcomeFlags::default(),
    })
}
