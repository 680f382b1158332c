//! Blind aggregation: no CSIT at the devices.
//!
//! The fully blind design relies on a large antenna array and i.i.d. channel
//! statistics; the partial-phase design runs on a single antenna with only a
//! coarse per-device phase estimate and accepts whatever weighted average the
//! channel imposes.

use num_complex::Complex64;

use crate::channel::CsiKind;
use crate::error::{Error, Result};
use crate::learning::ModelVector;
use crate::schemes::{
    AggregationInput, AggregationOutcome, OutcomeFlags, WeightsUsed,
};

/// Fully blind aggregation over M antennas.
///
/// Devices transmit `sqrt(P) w_k` with no preprocessing; the server combines
/// antennas with the summed-channel equalizer and divides by
/// `sqrt(P) K M sigma_h^2`. Accuracy comes from statistical averaging: the
/// residual interference and noise shrink like `1/sqrt(M)`.
pub fn fully_blind_aggregate(
    input: &AggregationInput,
    prev_global: &ModelVector,
) -> Result<AggregationOutcome> {
    input.validate()?;
    input.require_csi(CsiKind::CsirOnly, "fully blind aggregation")?;
    let _ = prev_global;
    let k_total = input.channel.devices();
    let m_total = input.channel.antennas();
    let dim = input.model_dim();
    let sqrt_p = input.power_budget.sqrt();

    let mut acc = vec![Complex64::new(0.0, 0.0); dim];
    for m in 0..m_total {
        let column_sum: Complex64 = (0..k_total).map(|k| input.channel.coeff(k, m)).sum();
        let weight = column_sum.conj();
        for i in 0..dim {
            // y_{m,i} = sqrt(P) sum_k h_{k,m} w_k[i] + z_{m,i}
            let mut y = input.noise.awgn[(m, i)];
            for k in 0..k_total {
                y += sqrt_p * input.channel.coeff(k, m) * input.local_models[k].as_slice()[i];
            }
            acc[i] += weight * y;
        }
    }
    let denom = sqrt_p * k_total as f64 * m_total as f64 * input.channel.sigma_h2();
    let estimate: Vec<f64> = acc.iter().map(|v| v.re / denom).collect();

    Ok(AggregationOutcome {
        global_model: ModelVector::from_vec(estimate)?,
        active_set: (0..k_total).collect(),
        weights_used: WeightsUsed::UniformOverActive,
        predicted_mse: None,
        flags: OutcomeFlags::default(),
    })
}

/// Unrounded antenna requirement `8 gamma_n^2 K^2 / (eps^2 c_n^2) * ln(6K/delta)`
/// with `c_n = 1/gamma_n + sigma_h/sigma_z`.
pub fn min_antennas_bound_raw(
    epsilon: f64,
    prob_delta: f64,
    devices: usize,
    gamma_n: f64,
    sigma_h: f64,
    sigma_z: f64,
) -> Result<f64> {
    for (name, v) in [
        ("epsilon", epsilon),
        ("gamma_n", gamma_n),
        ("sigma_h", sigma_h),
        ("sigma_z", sigma_z),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    if !(0.0 < prob_delta && prob_delta < 1.0) {
        return Err(Error::invalid(format!(
            "failure probability must lie in (0, 1), got {prob_delta}"
        )));
    }
    if devices == 0 {
        return Err(Error::invalid("need at least one device"));
    }
    let k = devices as f64;
    let c_n = 1.0 / gamma_n + sigma_h / sigma_z;
    Ok(8.0 * gamma_n * gamma_n * k * k / (epsilon * epsilon * c_n * c_n)
        * (6.0 * k / prob_delta).ln())
}

/// Minimum number of antennas for the blind estimator to hit accuracy
/// `epsilon` with probability at least `1 - prob_delta`.
pub fn min_antennas_bound(
    epsilon: f64,
    prob_delta: f64,
    devices: usize,
    gamma_n: f64,
    sigma_h: f64,
    sigma_z: f64,
) -> Result<u64> {
    Ok(min_antennas_bound_raw(epsilon, prob_delta, devices, gamma_n, sigma_h, sigma_z)?.ceil()
        as u64)
}

/// Partial-phase-aware blind aggregation on a single antenna.
///
/// Each device rotates by its coarse phase estimate before transmitting at
/// constant power; the server takes the real part and divides by
/// `sqrt(P) K`, applying no further processing. The compensated gains
/// `|h_k| cos(phase error)` stay positive but act as de-facto aggregation
/// weights, so the result is biased by design. Interference, when
/// configured, replaces the AWGN in the real-signal model.
pub fn partial_phase_blind_aggregate(
    input: &AggregationInput,
    prev_global: &ModelVector,
) -> Result<AggregationOutcome> {
    input.validate()?;
    input.require_single_antenna("partial-phase blind aggregation")?;
    input.require_csi(CsiKind::PartialPhase, "partial-phase blind aggregation")?;
    let _ = prev_global;
    let estimates = match input.csi {
        crate::channel::CsiView::PartialPhase { phase_estimates, .. } => phase_estimates,
        _ => unreachable!("checked above"),
    };
    let k_total = input.channel.devices();
    let dim = input.model_dim();
    let sqrt_p = input.power_budget.sqrt();

    // compensated real gain per device
    let gains: Vec<f64> = (0..k_total)
        .map(|k| {
            let h = input.channel.coeff(k, 0);
            h.norm() * (h.arg() - estimates[k]).cos()
        })
        .collect();

    let mut estimate = Vec::with_capacity(dim);
    for i in 0..dim {
        let disturbance = match &input.noise.interference {
            Some(xi) => xi[i],
            None => input.noise.awgn[(0, i)].re,
        };
        let mut y_r = disturbance;
        for k in 0..k_total {
            y_r += sqrt_p * gains[k] * input.local_models[k].as_slice()[i];
        }
        estimate.push(y_r / (sqrt_p * k_total as f64));
    }

    Ok(AggregationOutcome {
        global_model: ModelVector::from_vec(estimate)?,
        active_set: (0..k_total).collect(),
        weights_used: WeightsUsed::UniformOverActive,
        predicted_mse: None,
        flags: OutcomeFlags::default(),
    })
}
