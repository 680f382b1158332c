//! Per-round channel realizations, noise, interference, and CSI views.
//!
//! Channels are block fading: one realization per communication round, held
//! constant within the round. Each scheme sees the realization only through
//! the [`CsiView`] appropriate to its design.

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{sample_alpha_stable, sample_complex_gaussian, RngStream};

/// One round's K x M matrix of complex channel coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    coeffs: Array2<Complex64>,
    sigma_h2: f64,
}

impl ChannelRealization {
    pub fn from_coefficients(coeffs: Array2<Complex64>, sigma_h2: f64) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::invalid("channel matrix must be at least 1 x 1"));
        }
        if !sigma_h2.is_finite() || sigma_h2 <= 0.0 {
            return Err(Error::invalid(format!(
                "per-coefficient variance must be positive, got {sigma_h2}"
            )));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("non-finite channel coefficient"));
        }
        Ok(ChannelRealization { coeffs, sigma_h2 })
    }

    /// Number of devices K.
    pub fn devices(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Number of server antennas M.
    pub fn antennas(&self) -> usize {
        self.coeffs.ncols()
    }

    pub fn sigma_h2(&self) -> f64 {
        self.sigma_h2
    }

    pub fn coeff(&self, device: usize, antenna: usize) -> Complex64 {
        self.coeffs[(device, antenna)]
    }

    /// Channel vector of one device across antennas.
    pub fn device_row(&self, device: usize) -> ArrayView1<'_, Complex64> {
        self.coeffs.row(device)
    }

    /// The scalar coefficient of a device in the single-antenna case.
    pub fn single_antenna_coeff(&self, device: usize) -> Result<Complex64> {
        if self.antennas() != 1 {
            return Err(Error::UnsupportedConfiguration(format!(
                "expected a single-antenna channel, got M = {}",
                self.antennas()
            )));
        }
        Ok(self.coeffs[(device, 0)])
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    /// Order- and content-sensitive fingerprint, used to assert paired draws.
    pub fn fingerprint(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        let mut absorb = |bits: u64| {
            h ^= bits;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        for z in self.coeffs.iter() {
            absorb(z.re.to_bits());
            absorb(z.im.to_bits());
        }
        h
    }
}

/// Draw i.i.d. Rayleigh-fading coefficients: circularly symmetric complex
/// Gaussian entries with `E[|h|^2] = sigma_h2` (so `|h|^2 ~ Exp(1)` when
/// `sigma_h2 = 1`).
pub fn draw_rayleigh(
    stream: RngStream,
    devices: usize,
    antennas: usize,
    sigma_h2: f64,
) -> Result<ChannelRealization> {
    if devices == 0 || antennas == 0 {
        return Err(Error::invalid("need at least one device and one antenna"));
    }
    let flat = sample_complex_gaussian(stream, devices * antennas, sigma_h2)?;
    let coeffs = Array2::from_shape_vec((devices, antennas), flat.into_vec())
        .expect("shape matches sample count");
    ChannelRealization::from_coefficients(coeffs, sigma_h2)
}

/// How per-round channels are generated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChannelModel {
    /// i.i.d. Rayleigh fading with per-coefficient variance `sigma_h2`.
    Rayleigh { sigma_h2: f64 },
    /// Every coefficient equal to 1 + 0i. Useful as an impairment-free
    /// reference and for collapse tests.
    Unit,
}

impl ChannelModel {
    pub fn draw(
        &self,
        stream: RngStream,
        devices: usize,
        antennas: usize,
    ) -> Result<ChannelRealization> {
        match *self {
            ChannelModel::Rayleigh { sigma_h2 } => {
                draw_rayleigh(stream, devices, antennas, sigma_h2)
            }
            ChannelModel::Unit => ChannelRealization::from_coefficients(
                Array2::from_elem((devices, antennas), Complex64::new(1.0, 0.0)),
                1.0,
            ),
        }
    }

    pub fn sigma_h2(&self) -> f64 {
        match *self {
            ChannelModel::Rayleigh { sigma_h2 } => sigma_h2,
            ChannelModel::Unit => 1.0,
        }
    }
}

/// What a scheme is allowed to know about the channel.
///
/// The variants gate the aggregation entry points: each scheme checks the
/// view kind it was designed for and reads nothing beyond it. Device-side
/// quantities for the partial-phase schemes are exactly the stored phase
/// estimates.
#[derive(Clone, Debug, PartialEq)]
pub enum CsiView {
    /// Receiver-side knowledge only.
    CsirOnly,
    /// Each device knows its own channel entry; the server knows the
    /// denormalizing factor and the active-set size.
    LocalCsit,
    /// Full matrix known everywhere.
    GlobalCsit,
    /// Each device holds a coarse estimate of its own channel phase,
    /// accurate to within `phase_error_bound < pi/2`.
    PartialPhase {
        phase_estimates: Vec<f64>,
        phase_error_bound: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CsiKind {
    CsirOnly,
    LocalCsit,
    GlobalCsit,
    PartialPhase,
}

impl CsiView {
    pub fn kind(&self) -> CsiKind {
        match self {
            CsiView::CsirOnly => CsiKind::CsirOnly,
            CsiView::LocalCsit => CsiKind::LocalCsit,
            CsiView::GlobalCsit => CsiKind::GlobalCsit,
            CsiView::PartialPhase { .. } => CsiKind::PartialPhase,
        }
    }
}

/// Build the partial-phase view for a single-antenna channel: each device's
/// estimate is the true phase plus an independent uniform error on
/// `(-bound, bound)`.
///
/// `bound` must stay below `pi/2` so the compensated channel keeps a strictly
/// positive real part.
pub fn make_partial_phase_view(
    stream: RngStream,
    channel: &ChannelRealization,
    bound: f64,
) -> Result<CsiView> {
    if channel.antennas() != 1 {
        return Err(Error::UnsupportedConfiguration(
            "phase estimates are defined for single-antenna channels".into(),
        ));
    }
    if !bound.is_finite() || bound < 0.0 || bound >= std::f64::consts::FRAC_PI_2 {
        return Err(Error::invalid(format!(
            "phase error bound must lie in [0, pi/2), got {bound}"
        )));
    }
    let mut rng = stream.rng();
    let estimates = (0..channel.devices())
        .map(|k| {
            let true_phase = channel.coeff(k, 0).arg();
            if bound == 0.0 {
                true_phase
            } else {
                true_phase + rng.gen_range(-bound..bound)
            }
        })
        .collect();
    Ok(CsiView::PartialPhase {
        phase_estimates: estimates,
        phase_error_bound: bound,
    })
}

/// Additive-noise configuration for one experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// AWGN variance per complex entry (real and imaginary parts carry half
    /// each).
    pub sigma_z2: f64,
    /// Optional heavy-tailed interference applied to the real-signal model
    /// of the partial-phase scheme.
    pub interference: Option<InterferenceConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterferenceConfig {
    /// Tail index in (0, 2].
    pub alpha: f64,
    /// Scale parameter, > 0.
    pub delta: f64,
}

impl NoiseConfig {
    pub fn awgn(sigma_z2: f64) -> Self {
        NoiseConfig {
            sigma_z2,
            interference: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma_z2.is_finite() || self.sigma_z2 < 0.0 {
            return Err(Error::invalid(format!(
                "noise variance must be >= 0, got {}",
                self.sigma_z2
            )));
        }
        if let Some(intf) = self.interference {
            if !intf.alpha.is_finite() || intf.alpha <= 0.0 || intf.alpha > 2.0 {
                return Err(Error::invalid(format!(
                    "interference tail index must lie in (0, 2], got {}",
                    intf.alpha
                )));
            }
            if !intf.delta.is_finite() || intf.delta <= 0.0 {
                return Err(Error::invalid(format!(
                    "interference scale must be positive, got {}",
                    intf.delta
                )));
            }
        }
        Ok(())
    }
}

/// The noise drawn for one round: an M x s AWGN block and, if configured,
/// a length-s real interference vector.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundNoise {
    pub awgn: Array2<Complex64>,
    pub interference: Option<Vec<f64>>,
}

impl RoundNoise {
    /// A zero block, handy for noiseless runs and tests.
    pub fn silent(symbols: usize, antennas: usize) -> Self {
        RoundNoise {
            awgn: Array2::from_elem((antennas, symbols), Complex64::new(0.0, 0.0)),
            interference: None,
        }
    }

    pub fn symbols(&self) -> usize {
        self.awgn.ncols()
    }

    pub fn antennas(&self) -> usize {
        self.awgn.nrows()
    }
}

/// Draw one round of receiver noise: i.i.d. `CN(0, sigma_z2)` per antenna and
/// symbol, plus i.i.d. symmetric alpha-stable interference when configured.
pub fn draw_round_noise(
    stream: RngStream,
    symbols: usize,
    antennas: usize,
    cfg: &NoiseConfig,
) -> Result<RoundNoise> {
    cfg.validate()?;
    if antennas == 0 {
        return Err(Error::invalid("need at least one antenna"));
    }
    let flat = sample_complex_gaussian(stream.substream(0), antennas * symbols, cfg.sigma_z2)?;
    let awgn = Array2::from_shape_vec((antennas, symbols), flat.into_vec())
        .expect("shape matches sample count");
    let interference = match cfg.interference {
        Some(intf) => Some(sample_alpha_stable(
            stream.substream(1),
            symbols,
            intf.alpha,
            intf.delta,
        )?),
        None => None,
    };
    Ok(RoundNoise { awgn, interference })
}
