//! Device selection with equalizer design for the centralized CSIT scheme.
//!
//! The target problem maximizes the number of participating devices subject
//! to a cap `theta` on `max_{k in S} ||b||^2 / |b^H h_k|^2`. Greedy matching
//! pursuit grows the active set one device at a time, re-deriving the
//! equalizer as the dominant eigenvector of the active channels' outer-product
//! sum; a subset-enumeration oracle with the same equalizer rule serves as the
//! reference at small K.

use ndarray::Array2;
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::schemes::Equalizer;

/// Cost guard for the enumeration oracle.
const ORACLE_MAX_DEVICES: usize = 10;

/// A selected device set with its equalizer and achieved constraint value.
#[derive(Clone, Debug)]
pub struct SelectionResult {
    /// Active device indices, ascending. Empty when no single device is
    /// feasible.
    pub active: Vec<usize>,
    pub equalizer: Equalizer,
    /// `max_{k in S} ||b||^2 / |b^H h_k|^2`; infinite when empty.
    pub achieved_constraint: f64,
    /// `(sigma_z2 / power) * achieved_constraint`, the closed-form MSE this
    /// selection implies.
    pub predicted_mse: f64,
}

impl SelectionResult {
    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }
}

/// Dominant eigenvector of a Hermitian PSD matrix by deterministic power
/// iteration. Starts from the all-ones direction; if that lies in the null
/// space, restarts from the largest column.
fn dominant_eigenvector(a: &Array2<Complex64>) -> Vec<Complex64> {
    let m = a.nrows();
    if m == 1 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let frob = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut x = vec![Complex64::new(1.0 / (m as f64).sqrt(), 0.0); m];
    for _ in 0..400 {
        let mut y = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..m {
                acc += a[(i, j)] * x[j];
            }
            y[i] = acc;
        }
        let norm = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-14 * frob.max(1.0) {
            // start vector was orthogonal to the range; restart from the
            // column with the largest norm, which always lies in it
            let best_col = (0..m)
                .max_by(|&p, &q| {
                    let np: f64 = (0..m).map(|i| a[(i, p)].norm_sqr()).sum();
                    let nq: f64 = (0..m).map(|i| a[(i, q)].norm_sqr()).sum();
                    np.partial_cmp(&nq).unwrap()
                })
                .unwrap();
            let col_norm: f64 = (0..m)
                .map(|i| a[(i, best_col)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if col_norm == 0.0 {
                return x; // zero matrix, any unit vector
            }
            for i in 0..m {
                x[i] = a[(i, best_col)] / col_norm;
            }
            continue;
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    x
}

/// For a candidate set, derive the equalizer and the worst-device gain
/// `min_{k in S} |b^H h_k|^2` (with unit-norm b).
fn evaluate_set(channel: &ChannelRealization, set: &[usize]) -> (Vec<Complex64>, f64) {
    let m = channel.antennas();
    let mut outer = Array2::from_elem((m, m), Complex64::new(0.0, 0.0));
    for &k in set {
        let row = channel.device_row(k);
        for i in 0..m {
            for j in 0..m {
                outer[(i, j)] += row[i] * row[j].conj();
            }
        }
    }
    let b = dominant_eigenvector(&outer);
    let mut min_gain = f64::INFINITY;
    for &k in set {
        let row = channel.device_row(k);
        let inner: Complex64 = (0..m).map(|i| b[i].conj() * row[i]).sum();
        min_gain = min_gain.min(inner.norm_sqr());
    }
    (b, min_gain)
}

fn result_from_set(
    channel: &ChannelRealization,
    set: Vec<usize>,
    b: Vec<Complex64>,
    min_gain: f64,
    power: f64,
    sigma_z2: f64,
) -> SelectionResult {
    let achieved = if min_gain > 0.0 {
        1.0 / min_gain
    } else {
        f64::INFINITY
    };
    let _ = channel;
    SelectionResult {
        active: set,
        equalizer: Equalizer::Antenna(b),
        achieved_constraint: achieved,
        predicted_mse: (sigma_z2 / power) * achieved,
    }
}

fn empty_result(m: usize, power: f64, sigma_z2: f64) -> SelectionResult {
    let _ = (power, sigma_z2);
    SelectionResult {
        active: Vec::new(),
        equalizer: Equalizer::Antenna(vec![Complex64::new(0.0, 0.0); m]),
        achieved_constraint: f64::INFINITY,
        predicted_mse: f64::INFINITY,
    }
}

fn validate_selection_args(power: f64, sigma_z2: f64, theta: f64) -> Result<()> {
    if !power.is_finite() || power <= 0.0 {
        return Err(Error::invalid(format!("power must be positive, got {power}")));
    }
    if !sigma_z2.is_finite() || sigma_z2 < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be >= 0, got {sigma_z2}"
        )));
    }
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::invalid(format!(
            "selection threshold must be positive, got {theta}"
        )));
    }
    Ok(())
}

/// Greedy matching-pursuit device selection.
///
/// Starts empty and repeatedly adds the device whose inclusion maximizes the
/// post-update worst-device gain, stopping when even the best addition would
/// break the budget. Returns an empty result (flagged by `is_empty`) when no
/// single device fits. Ties favor the lowest device index.
pub fn mp_greedy_selection(
    channel: &ChannelRealization,
    power: f64,
    sigma_z2: f64,
    theta: f64,
) -> Result<SelectionResult> {
    validate_selection_args(power, sigma_z2, theta)?;
    let k_total = channel.devices();
    let mut active: Vec<usize> = Vec::new();
    let mut current: Option<(Vec<Complex64>, f64)> = None;

    loop {
        let mut best: Option<(usize, Vec<Complex64>, f64)> = None;
        for cand in 0..k_total {
            if active.contains(&cand) {
                continue;
            }
            let mut trial = active.clone();
            trial.push(cand);
            trial.sort_unstable();
            let (b, min_gain) = evaluate_set(channel, &trial);
            let better = match &best {
                None => true,
                Some((_, _, gain)) => min_gain > *gain,
            };
            if better {
                best = Some((cand, b, min_gain));
            }
        }
        match best {
            Some((cand, b, min_gain)) if min_gain * theta >= 1.0 => {
                active.push(cand);
                active.sort_unstable();
                current = Some((b, min_gain));
            }
            _ => break,
        }
    }

    match current {
        Some((b, min_gain)) => Ok(result_from_set(
            channel, active, b, min_gain, power, sigma_z2,
        )),
        None => Ok(empty_result(channel.antennas(), power, sigma_z2)),
    }
}

/// Exhaustive selection oracle: enumerate every nonempty subset under the
/// same equalizer rule and return the largest feasible one (ties broken by
/// the smaller achieved constraint, then enumeration order). Refuses K > 10.
pub fn brute_force_selection_oracle(
    channel: &ChannelRealization,
    power: f64,
    sigma_z2: f64,
    theta: f64,
) -> Result<SelectionResult> {
    validate_selection_args(power, sigma_z2, theta)?;
    let k_total = channel.devices();
    if k_total > ORACLE_MAX_DEVICES {
        return Err(Error::invalid(format!(
            "enumeration oracle refuses K = {k_total} > {ORACLE_MAX_DEVICES}"
        )));
    }
    let mut best: Option<(Vec<usize>, Vec<Complex64>, f64)> = None;
    for mask in 1u32..(1 << k_total) {
        let set: Vec<usize> = (0..k_total).filter(|&k| mask & (1 << k) != 0).collect();
        let (b, min_gain) = evaluate_set(channel, &set);
        if min_gain * theta < 1.0 {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((cur_set, _, cur_gain)) => {
                set.len() > cur_set.len() || (set.len() == cur_set.len() && min_gain > *cur_gain)
            }
        };
        if replace {
            best = Some((set, b, min_gain));
        }
    }
    match best {
        Some((set, b, min_gain)) => Ok(result_from_set(
            channel, set, b, min_gain, power, sigma_z2,
        )),
        None => Ok(empty_result(channel.antennas(), power, sigma_z2)),
    }
}
