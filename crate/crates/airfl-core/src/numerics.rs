//! Random sampling, special functions, and statistics shared by all modules.
//!
//! Randomness flows through [`RngStream`], a value type holding a `(seed,
//! stream)` pair. Streams are derived by key rather than consumed
//! sequentially, so per-device and per-round draws are identical no matter in
//! which order (or on which thread) they are generated.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::learning::ModelVector;

/// Euler–Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// Finalizer from splitmix64; a cheap avalanche for stream derivation.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed, reproducible randomness source.
///
/// Two streams with the same `(seed, stream)` pair produce bit-identical
/// sequences; distinct stream ids select statistically independent ChaCha
/// streams. `RngStream` is `Copy` and all sampling functions take it by
/// value, so calling an operation twice with the same stream yields the same
/// output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    stream: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, stream: 0 }
    }

    /// Derive a child stream keyed by `tag`.
    ///
    /// Derivation is hierarchical: `s.substream(a).substream(b)` differs from
    /// `s.substream(b).substream(a)`.
    pub fn substream(&self, tag: u64) -> Self {
        RngStream {
            seed: self.seed,
            stream: mix64(self.stream ^ mix64(tag)),
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// A vector of complex samples with all entries finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVec(Vec<Complex64>);

impl ComplexVec {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = entries
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::invalid(format!(
                "non-finite complex entry at index {i}"
            )));
        }
        Ok(ComplexVec(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }
}

impl std::ops::Deref for ComplexVec {
    type Target = [Complex64];
    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

/// Draw `n` i.i.d. circularly symmetric complex Gaussian samples with
/// per-entry `E[|z|^2] = variance` (real and imaginary parts each carry
/// `variance / 2`).
pub fn sample_complex_gaussian(stream: RngStream, n: usize, variance: f64) -> Result<ComplexVec> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::invalid(format!(
            "complex Gaussian variance must be finite and >= 0, got {variance}"
        )));
    }
    let std_part = (variance / 2.0).sqrt();
    let mut rng = stream.rng();
    let entries = (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * std_part, im * std_part)
        })
        .collect();
    ComplexVec::new(entries)
}

/// Draw `n` i.i.d. symmetric alpha-stable samples with characteristic
/// function `exp(-delta^alpha |w|^alpha)`.
///
/// Uses the Chambers–Mallows–Stuck transform of a uniform angle and an
/// exponential variate; exact, no rejection step. At `alpha = 2` the law is
/// `N(0, 2 delta^2)`, at `alpha = 1` it is Cauchy with scale `delta`.
pub fn sample_alpha_stable(stream: RngStream, n: usize, alpha: f64, delta: f64) -> Result<Vec<f64>> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha > 2.0 {
        return Err(Error::invalid(format!(
            "stable tail index must lie in (0, 2], got {alpha}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::invalid(format!(
            "stable scale must be positive, got {delta}"
        )));
    }
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u01: f64 = rng.sample(Open01);
        let u = std::f64::consts::PI * (u01 - 0.5); // uniform on (-pi/2, pi/2)
        let x = if alpha == 1.0 {
            u.tan()
        } else {
            let w: f64 = rng.sample(Exp1);
            let cu = u.cos();
            ((alpha * u).sin() / cu.powf(1.0 / alpha))
                * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
        };
        out.push(delta * x);
    }
    Ok(out)
}

/// Upper exponential integral `∫_x^∞ e^{-t}/t dt` for `x > 0` (the classical
/// E1), to about 1e-12 relative accuracy.
///
/// Series expansion below 1, continued fraction (modified Lentz) above.
pub fn exp_integral_upper(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "exp_integral_upper requires x > 0 (integral diverges at 0), got {x}"
        )));
    }
    if x <= 1.0 {
        // E1(x) = -gamma - ln x + sum_{k>=1} (-1)^{k+1} x^k / (k * k!)
        let mut sum = -EULER_GAMMA - x.ln();
        let mut term = x; // k = 1
        let mut k = 1u32;
        loop {
            sum += term;
            k += 1;
            let kf = f64::from(k);
            term *= -x * (kf - 1.0) / (kf * kf);
            if term.abs() <= sum.abs() * 1e-17 + 1e-300 || k > 60 {
                break;
            }
        }
        Ok(sum)
    } else {
        // E1(x) = e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        const FPMIN: f64 = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / FPMIN;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=200u32 {
            let a = -f64::from(i * i);
            b += 2.0;
            d = 1.0 / (a * d + b);
            c = b + a / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        Ok(h * (-x).exp())
    }
}

/// Sample mean bias and mean squared error of `samples` against `target`.
///
/// Returns `(|mean(samples) - target|, mean_i |sample_i - target|^2)` with
/// the Euclidean norm.
pub fn empirical_mean_and_mse(
    samples: &[ModelVector],
    target: &ModelVector,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::invalid("empirical_mean_and_mse needs samples"));
    }
    let dim = target.dim();
    for (i, s) in samples.iter().enumerate() {
        if s.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "sample {i} has dimension {} but target has {dim}",
                s.dim()
            )));
        }
    }
    let n = samples.len() as f64;
    let mut mean = vec![0.0; dim];
    let mut mse = 0.0;
    for s in samples {
        let mut dist_sq = 0.0;
        for (j, (&v, &t)) in s.as_slice().iter().zip(target.as_slice()).enumerate() {
            mean[j] += v / n;
            let d = v - t;
            dist_sq += d * d;
        }
        mse += dist_sq / n;
    }
    let bias_sq: f64 = mean
        .iter()
        .zip(target.as_slice())
        .map(|(&m, &t)| (m - t) * (m - t))
        .sum();
    Ok((bias_sq.sqrt(), mse))
}
