//! Weighted over-the-air aggregation on a single antenna.
//!
//! Devices quadrant-compensate their phase, normalize, and transmit at
//! constant power; the server stacks real and imaginary receive components,
//! applies a two-dimensional MMSE equalizer matched to the current weight
//! vector, and adds the weighted means back. Aggregation weights are free
//! parameters selected elsewhere (see [`crate::optim::solve_weight_selection`]).

use ndarray::Array2;

use crate::channel::{ChannelRealization, CsiKind, CsiView};
use crate::error::{Error, Result};
use crate::learning::ModelVector;
use crate::optim::{WeightProblem, WeightVector};
use crate::schemes::{
    normalization_stats, AggregationInput, AggregationOutcome, OutcomeFlags, WeightsUsed,
    SIGMA_FLOOR,
};

/// Stack the phase-compensated channel into its real 2 x K representation:
/// row 0 holds real parts, row 1 imaginary parts of `h_k e^{-j est_k}`.
pub fn stacked_compensated_channel(
    channel: &ChannelRealization,
    csi: &CsiView,
) -> Result<Array2<f64>> {
    if channel.antennas() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "stacked channel is defined for single-antenna servers".into(),
        ));
    }
    let estimates = match csi {
        CsiView::PartialPhase { phase_estimates, .. } => phase_estimates,
        _ => {
            return Err(Error::invalid(
                "stacked channel requires a partial-phase view",
            ))
        }
    };
    let k = channel.devices();
    if estimates.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} phase estimates for {k} devices",
            estimates.len()
        )));
    }
    let mut h = Array2::zeros((2, k));
    for (idx, &est) in estimates.iter().enumerate() {
        let compensated = channel.coeff(idx, 0) * num_complex::Complex64::cis(-est);
        h[(0, idx)] = compensated.re;
        h[(1, idx)] = compensated.im;
    }
    Ok(h)
}

/// Eigendecomposition of a symmetric 2 x 2 matrix; eigenvalues descending.
fn sym2_eigen(a: [[f64; 2]; 2]) -> [(f64, [f64; 2]); 2] {
    let half_tr = 0.5 * (a[0][0] + a[1][1]);
    let half_diff = 0.5 * (a[0][0] - a[1][1]);
    let disc = (half_diff * half_diff + a[0][1] * a[0][1]).sqrt();
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    let vec_for = |l: f64| -> [f64; 2] {
        // (a - l I) v = 0; pick the better-conditioned expression
        let r1 = [a[0][0] - l, a[0][1]];
        let r2 = [a[0][1], a[1][1] - l];
        let (x, y) = if r1[0].abs() + r1[1].abs() >= r2[0].abs() + r2[1].abs() {
            (-r1[1], r1[0])
        } else {
            (-r2[1], r2[0])
        };
        let n = (x * x + y * y).sqrt();
        if n == 0.0 {
            [1.0, 0.0]
        } else {
            [x / n, y / n]
        }
    };
    [(l1, vec_for(l1)), (l2, vec_for(l2))]
}

/// Apply the pseudo-inverse of a symmetric PSD 2 x 2 matrix to `rhs`,
/// truncating eigenvalues below a relative tolerance.
fn sym2_pseudo_apply(a: [[f64; 2]; 2], rhs: [f64; 2]) -> [f64; 2] {
    let eig = sym2_eigen(a);
    let lead = eig[0].0.abs().max(1e-300);
    let mut out = [0.0; 2];
    for (l, v) in eig {
        if l > 1e-12 * lead {
            let proj = (v[0] * rhs[0] + v[1] * rhs[1]) / l;
            out[0] += proj * v[0];
            out[1] += proj * v[1];
        }
    }
    out
}

/// MSE-optimal stacked equalizer for target combination `v` (per-device
/// amplitude the equalized channel should produce):
/// `b = (H H^T + (noise_var/P) I)^{-1} H v`, with eigenvalue truncation in
/// the noiseless limit.
///
/// `noise_var` is the variance of each stacked real noise entry.
pub fn wafel_equalizer(
    target: &[f64],
    h: &Array2<f64>,
    power: f64,
    noise_var: f64,
) -> Result<[f64; 2]> {
    let k = h.ncols();
    if h.nrows() != 2 {
        return Err(Error::DimensionMismatch("stacked channel must have 2 rows".into()));
    }
    if target.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "target has {} entries for {k} devices",
            target.len()
        )));
    }
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::invalid(format!("power must be positive, got {power}")));
    }
    if !noise_var.is_finite() || noise_var < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be >= 0, got {noise_var}"
        )));
    }
    let mut g = [[0.0f64; 2]; 2];
    let mut rhs = [0.0f64; 2];
    for idx in 0..k {
        let col = [h[(0, idx)], h[(1, idx)]];
        g[0][0] += col[0] * col[0];
        g[0][1] += col[0] * col[1];
        g[1][1] += col[1] * col[1];
        rhs[0] += col[0] * target[idx];
        rhs[1] += col[1] * target[idx];
    }
    g[1][0] = g[0][1];
    let ridge = noise_var / power;
    if ridge > 0.0 {
        let a = [[g[0][0] + ridge, g[0][1]], [g[1][0], g[1][1] + ridge]];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        Ok([
            (a[1][1] * rhs[0] - a[0][1] * rhs[1]) / det,
            (a[0][0] * rhs[1] - a[1][0] * rhs[0]) / det,
        ])
    } else {
        Ok(sym2_pseudo_apply(g, rhs))
    }
}

/// Closed-form MSE of the weighted design:
/// `s * alpha^T diag(sigma) (I + (P / sigma_z2) H^T H)^{-1} diag(sigma) alpha`.
///
/// `sigma_z2` is the per-entry variance of the stacked real noise. Evaluated
/// through the 2 x 2 Gram matrix, so no K x K inverse is formed; the
/// noiseless limit uses eigenvalue truncation.
pub fn wafel_predicted_mse(
    alpha: &WeightVector,
    sigma: &[f64],
    h: &Array2<f64>,
    power: f64,
    sigma_z2: f64,
    model_dim: usize,
) -> f64 {
    let k = alpha.len();
    debug_assert_eq!(sigma.len(), k);
    debug_assert_eq!(h.ncols(), k);
    let v: Vec<f64> = (0..k).map(|i| alpha[i] * sigma[i]).collect();
    let mut g = [[0.0f64; 2]; 2];
    let mut hv = [0.0f64; 2];
    for (idx, &vi) in v.iter().enumerate() {
        let col = [h[(0, idx)], h[(1, idx)]];
        g[0][0] += col[0] * col[0];
        g[0][1] += col[0] * col[1];
        g[1][1] += col[1] * col[1];
        hv[0] += col[0] * vi;
        hv[1] += col[1] * vi;
    }
    g[1][0] = g[0][1];
    let v_sq: f64 = v.iter().map(|x| x * x).sum();
    let reduction = if sigma_z2 > 0.0 {
        let c = power / sigma_z2;
        // c (I + c G)^{-1} applied to Hv
        let a = [
            [1.0 / c + g[0][0], g[0][1]],
            [g[1][0], 1.0 / c + g[1][1]],
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let sol = [
            (a[1][1] * hv[0] - a[0][1] * hv[1]) / det,
            (a[0][0] * hv[1] - a[1][0] * hv[0]) / det,
        ];
        hv[0] * sol[0] + hv[1] * sol[1]
    } else {
        let sol = sym2_pseudo_apply(g, hv);
        hv[0] * sol[0] + hv[1] * sol[1]
    };
    (model_dim as f64) * (v_sq - reduction).max(0.0)
}

/// Build the weight-selection problem for the current round: the MSE
/// quadratic form `Q = diag(sigma) (I + (P / sigma_z2) H^T H)^{-1} diag(sigma)`
/// (without the model-dimension factor), the objective diagonal `d`, and the
/// budget `theta`.
pub fn wafel_weight_problem(
    sigma: &[f64],
    h: &Array2<f64>,
    power: f64,
    sigma_z2: f64,
    theta: f64,
    d: Vec<f64>,
) -> Result<WeightProblem> {
    let k = sigma.len();
    if h.ncols() != k || h.nrows() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "stacked channel is {} x {}, expected 2 x {k}",
            h.nrows(),
            h.ncols()
        )));
    }
    let mut g = [[0.0f64; 2]; 2];
    for idx in 0..k {
        let col = [h[(0, idx)], h[(1, idx)]];
        g[0][0] += col[0] * col[0];
        g[0][1] += col[0] * col[1];
        g[1][1] += col[1] * col[1];
    }
    g[1][0] = g[0][1];
    // mid = B such that (I + c H^T H)^{-1} = I - H^T B H
    let mid = if sigma_z2 > 0.0 {
        let c = power / sigma_z2;
        let a = [
            [1.0 / c + g[0][0], g[0][1]],
            [g[1][0], 1.0 / c + g[1][1]],
        ];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        [
            [a[1][1] / det, -a[0][1] / det],
            [-a[1][0] / det, a[0][0] / det],
        ]
    } else {
        // pseudo-inverse of G
        let eig = sym2_eigen(g);
        let lead = eig[0].0.abs().max(1e-300);
        let mut b = [[0.0f64; 2]; 2];
        for (l, v) in eig {
            if l > 1e-12 * lead {
                for i in 0..2 {
                    for j in 0..2 {
                        b[i][j] += v[i] * v[j] / l;
                    }
                }
            }
        }
        b
    };
    let mut q = Array2::zeros((k, k));
    for i in 0..k {
        let ci = [h[(0, i)], h[(1, i)]];
        for j in i..k {
            let cj = [h[(0, j)], h[(1, j)]];
            let mut hbh = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    hbh += ci[a] * mid[a][b] * cj[b];
                }
            }
            let base = if i == j { 1.0 } else { 0.0 };
            let value = sigma[i] * sigma[j] * (base - hbh);
            q[(i, j)] = value;
            q[(j, i)] = value;
        }
    }
    Ok(WeightProblem { q, d, theta })
}

/// Weighted aggregation round.
///
/// Devices remove their entry mean, divide by the shared scale (the average
/// per-device deviation, floored), rotate by their phase estimate, and send
/// at constant power. The server equalizes the stacked real signal toward
/// `sum_k alpha_k w_k` and restores the weighted mean. The estimate is
/// unbiased up to the channel-misalignment residual of the equalizer fit.
pub fn wafel_aggregate(
    input: &AggregationInput,
    alpha: &WeightVector,
    prev_global: &ModelVector,
) -> Result<AggregationOutcome> {
    input.validate()?;
    input.require_single_antenna("weighted aggregation")?;
    input.require_csi(CsiKind::PartialPhase, "weighted aggregation")?;
    let _ = prev_global;
    let k = input.channel.devices();
    if alpha.len() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {k} devices",
            alpha.len()
        )));
    }

    let stats = normalization_stats(input.local_models);
    let all: Vec<usize> = (0..k).collect();
    let (_, sigma_bar) = stats.means_over(&all);
    let scale = sigma_bar.max(SIGMA_FLOOR);

    let h = stacked_compensated_channel(input.channel, input.csi)?;
    let target: Vec<f64> = (0..k).map(|i| scale * alpha[i]).collect();
    let noise_var = input.noise_variance / 2.0; // per stacked real entry
    let b = wafel_equalizer(&target, &h, input.power_budget, noise_var)?;

    let dim = input.model_dim();
    let sqrt_p = input.power_budget.sqrt();
    // equalized per-device coefficient b^T h_col_k
    let through: Vec<f64> = (0..k).map(|i| b[0] * h[(0, i)] + b[1] * h[(1, i)]).collect();
    let weighted_mean: f64 = (0..k).map(|i| alpha[i] * stats.eta[i]).sum();

    let mut estimate = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut signal = 0.0;
        for dev in 0..k {
            let normalized = (input.local_models[dev].as_slice()[i] - stats.eta[dev]) / scale;
            signal += through[dev] * normalized;
        }
        let z = input.noise.awgn[(0, i)];
        let noise_term = (b[0] * z.re + b[1] * z.im) / sqrt_p;
        estimate.push(signal + noise_term + weighted_mean);
    }

    let predicted = wafel_predicted_mse(
        alpha,
        &vec![scale; k],
        &h,
        input.power_budget,
        noise_var,
        dim,
    );

    Ok(AggregationOutcome {
        global_model: ModelVector::from_vec(estimate)?,
        active_set: all,
        weights_used: WeightsUsed::Weighted(alpha.clone()),
        predicted_mse: Some(predicted),
        flags: OutcomeFlags::default(),
    })
}
