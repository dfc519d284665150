//! Time-varying, frequency-selective channel generators.
//!
//! Two model families are provided: tapped-delay-line channels whose taps
//! follow the classic isotropic-scattering (Jakes) model, and clustered
//! delay-line (CDL) channels built from a ray table with per-element array
//! responses, polarization coupling and direction-dependent Doppler.
//!
//! A [`ChannelSampler`] is immutable after construction: all randomness is
//! consumed from the explicit seed up front, so the same (config, seed) pair
//! reproduces the same realization bit for bit, and samplers can be evaluated
//! from multiple workers concurrently.

mod cdl;
mod table;
mod tdl;

pub use cdl::CdlParams;
pub use table::{CdlCluster, CdlTable};

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    EmptyProfile,
    NegativeDoppler,
    /// Fewer rays per tap than the sum-of-rays model supports.
    TooFewRays,
    NonIncreasingDelays,
    NonPositivePower,
    InvalidSpread,
    InvalidArray(&'static str),
    InvalidVelocity,
    BadTable(String),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::EmptyProfile => write!(f, "tap profile is empty"),
            ChannelError::NegativeDoppler => write!(f, "maximum Doppler must be >= 0"),
            ChannelError::TooFewRays => write!(f, "need at least 8 rays per tap"),
            ChannelError::NonIncreasingDelays => {
                write!(f, "tap delays must be strictly increasing and >= 0")
            }
            ChannelError::NonPositivePower => write!(f, "tap powers must be > 0"),
            ChannelError::InvalidSpread => write!(f, "target spreads must be > 0"),
            ChannelError::InvalidArray(what) => write!(f, "invalid antenna array: {what}"),
            ChannelError::InvalidVelocity => write!(f, "velocity must be finite with speed >= 0"),
            ChannelError::BadTable(msg) => write!(f, "bad CDL table: {msg}"),
        }
    }
}

/// UE velocity; direction matters as much as speed for the correlation
/// behaviour of spatial channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityVector {
    pub speed_mps: f64,
    pub azimuth_rad: f64,
    /// Elevation of travel; 0 = horizontal motion.
    pub elevation_rad: f64,
}

impl VelocityVector {
    pub fn new(speed_mps: f64, azimuth_rad: f64) -> Result<Self, ChannelError> {
        let v = VelocityVector {
            speed_mps,
            azimuth_rad,
            elevation_rad: 0.0,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn from_kmh(speed_kmh: f64, azimuth_deg: f64) -> Result<Self, ChannelError> {
        Self::new(speed_kmh / 3.6, crate::math::deg_to_rad(azimuth_deg))
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if !(self.speed_mps >= 0.0)
            || !self.speed_mps.is_finite()
            || !self.azimuth_rad.is_finite()
            || !self.elevation_rad.is_finite()
        {
            return Err(ChannelError::InvalidVelocity);
        }
        Ok(())
    }

    /// Cartesian velocity, x toward the array boresight.
    pub fn vector_mps(&self) -> [f64; 3] {
        let (sa, ca) = libm::sincos(self.azimuth_rad);
        let (se, ce) = libm::sincos(self.elevation_rad);
        [
            self.speed_mps * ce * ca,
            self.speed_mps * ce * sa,
            self.speed_mps * se,
        ]
    }

    /// Maximum Doppler shift v/λ at the given carrier.
    pub fn max_doppler_hz(&self, carrier_hz: f64) -> f64 {
        self.speed_mps * carrier_hz / SPEED_OF_LIGHT
    }
}

/// Power-delay profile for the tapped-delay-line model. Powers are
/// normalized to unit total at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    taps: Vec<(f64, f64)>,
}

impl TapProfile {
    /// Build from (delay seconds, linear power) pairs. Delays must be
    /// strictly increasing and non-negative, powers positive.
    pub fn new(taps: &[(f64, f64)]) -> Result<Self, ChannelError> {
        if taps.is_empty() {
            return Err(ChannelError::EmptyProfile);
        }
        let mut prev = f64::NEG_INFINITY;
        let mut total = 0.0;
        for &(delay, power) in taps {
            if !(delay >= 0.0) || delay <= prev || !delay.is_finite() {
                return Err(ChannelError::NonIncreasingDelays);
            }
            if !(power > 0.0) || !power.is_finite() {
                return Err(ChannelError::NonPositivePower);
            }
            prev = delay;
            total += power;
        }
        Ok(TapProfile {
            taps: taps.iter().map(|&(d, p)| (d, p / total)).collect(),
        })
    }

    /// Single tap at zero delay (flat fading).
    pub fn single() -> Self {
        TapProfile {
            taps: alloc::vec![(0.0, 1.0)],
        }
    }

    pub fn taps(&self) -> &[(f64, f64)] {
        &self.taps
    }
}

/// Element radiation pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementPattern {
    Isotropic,
    /// 65°-HPBW directional element (8 dBi peak, 30 dB floor).
    Directional,
}

/// Uniform planar array in the y-z plane, boresight along +x.
///
/// `rows` counts vertically stacked element positions, `columns` counts
/// horizontal positions. With two polarizations the ±45° slanted elements
/// are co-located per position; element index order is all positions of the
/// first polarization, then all positions of the second.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaArray {
    pub rows: usize,
    pub columns: usize,
    pub polarizations: usize,
    pub horizontal_spacing_wl: f64,
    pub vertical_spacing_wl: f64,
    pub pattern: ElementPattern,
}

impl AntennaArray {
    pub fn new(
        rows: usize,
        columns: usize,
        polarizations: usize,
        horizontal_spacing_wl: f64,
        vertical_spacing_wl: f64,
        pattern: ElementPattern,
    ) -> Result<Self, ChannelError> {
        if rows == 0 || columns == 0 {
            return Err(ChannelError::InvalidArray("zero rows or columns"));
        }
        if polarizations == 0 || polarizations > 2 {
            return Err(ChannelError::InvalidArray("polarizations must be 1 or 2"));
        }
        if !(horizontal_spacing_wl > 0.0) || !(vertical_spacing_wl > 0.0) {
            return Err(ChannelError::InvalidArray("spacings must be > 0"));
        }
        Ok(AntennaArray {
            rows,
            columns,
            polarizations,
            horizontal_spacing_wl,
            vertical_spacing_wl,
            pattern,
        })
    }

    /// Base-station default: 2 rows × 4 columns, cross-polarized, 0.5λ
    /// horizontal and 0.8λ vertical spacing.
    pub fn bs_default() -> Self {
        AntennaArray {
            rows: 2,
            columns: 4,
            polarizations: 2,
            horizontal_spacing_wl: 0.5,
            vertical_spacing_wl: 0.8,
            pattern: ElementPattern::Isotropic,
        }
    }

    /// UE default: two co-located cross-polarized isotropic elements.
    pub fn ue_default() -> Self {
        AntennaArray {
            rows: 1,
            columns: 1,
            polarizations: 2,
            horizontal_spacing_wl: 0.5,
            vertical_spacing_wl: 0.5,
            pattern: ElementPattern::Isotropic,
        }
    }

    pub fn num_positions(&self) -> usize {
        self.rows * self.columns
    }

    pub fn num_elements(&self) -> usize {
        self.num_positions() * self.polarizations
    }

    /// Element position in wavelengths, position-major indexing.
    pub(crate) fn position_wl(&self, pos: usize) -> [f64; 3] {
        let row = pos / self.columns;
        let col = pos % self.columns;
        [
            0.0,
            col as f64 * self.horizontal_spacing_wl,
            row as f64 * self.vertical_spacing_wl,
        ]
    }

    /// Polarization slant angles in radians: ±45° when cross-polarized,
    /// vertical otherwise.
    pub(crate) fn slants_rad(&self) -> Vec<f64> {
        if self.polarizations == 2 {
            alloc::vec![core::f64::consts::FRAC_PI_4, -core::f64::consts::FRAC_PI_4]
        } else {
            alloc::vec![0.0]
        }
    }

    /// Field components (F_θ, F_φ) for a wave at (zenith, azimuth) radians
    /// seen by an element with the given slant.
    pub(crate) fn field(&self, zenith_rad: f64, azimuth_rad: f64, slant_rad: f64) -> (f64, f64) {
        let gain = match self.pattern {
            ElementPattern::Isotropic => 1.0,
            ElementPattern::Directional => {
                let zd = crate::math::rad_to_deg(zenith_rad);
                let ad = crate::math::rad_to_deg(crate::math::wrap_pi(azimuth_rad));
                let av = (12.0 * ((zd - 90.0) / 65.0) * ((zd - 90.0) / 65.0)).min(30.0);
                let ah = (12.0 * (ad / 65.0) * (ad / 65.0)).min(30.0);
                let att_db = (av + ah).min(30.0);
                libm::pow(10.0, (8.0 - att_db) / 20.0)
            }
        };
        let (s, c) = libm::sincos(slant_rad);
        (gain * c, gain * s)
    }
}

/// Channel response on a frequency grid at one instant, indexed
/// (subcarrier, rx element, tx element).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTensor {
    pub num_sc: usize,
    pub num_rx: usize,
    pub num_tx: usize,
    pub data: Vec<Complex64>,
}

impl ChannelTensor {
    pub(crate) fn zeros(num_sc: usize, num_rx: usize, num_tx: usize) -> Self {
        ChannelTensor {
            num_sc,
            num_rx,
            num_tx,
            data: alloc::vec![Complex64::new(0.0, 0.0); num_sc * num_rx * num_tx],
        }
    }

    #[inline]
    pub fn at(&self, sc: usize, rx: usize, tx: usize) -> Complex64 {
        self.data[(sc * self.num_rx + rx) * self.num_tx + tx]
    }

    /// The rx × tx matrix at one subcarrier, row-major.
    pub fn matrix_at(&self, sc: usize) -> &[Complex64] {
        let stride = self.num_rx * self.num_tx;
        &self.data[sc * stride..(sc + 1) * stride]
    }

    pub fn total_power(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Deterministic time/frequency channel realization.
pub struct ChannelSampler {
    kind: SamplerKind,
    num_rx: usize,
    num_tx: usize,
}

enum SamplerKind {
    Tdl(tdl::TdlSampler),
    Cdl(cdl::CdlSampler),
}

impl ChannelSampler {
    /// Tapped-delay-line channel; every tap is an independent sum-of-rays
    /// Jakes process with `num_rays` uniformly spaced arrival angles (random
    /// rotation per tap) and independent uniform initial phases. SISO.
    pub fn tdl(
        profile: &TapProfile,
        max_doppler_hz: f64,
        num_rays: usize,
        seed: u64,
    ) -> Result<Self, ChannelError> {
        Ok(ChannelSampler {
            kind: SamplerKind::Tdl(tdl::TdlSampler::new(
                profile,
                max_doppler_hz,
                num_rays,
                seed,
            )?),
            num_rx: 1,
            num_tx: 1,
        })
    }

    /// Clustered-delay-line MIMO channel from a ray table.
    pub fn cdl(params: &CdlParams<'_>, seed: u64) -> Result<Self, ChannelError> {
        let s = cdl::CdlSampler::new(params, seed)?;
        let (num_rx, num_tx) = (s.num_rx(), s.num_tx());
        Ok(ChannelSampler {
            kind: SamplerKind::Cdl(s),
            num_rx,
            num_tx,
        })
    }

    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    /// Evaluate H(t, f) on a baseband frequency grid (Hz offsets from the
    /// carrier). Deterministic and continuous in `t`.
    pub fn freq_response(&self, t_s: f64, freqs_hz: &[f64]) -> ChannelTensor {
        match &self.kind {
            SamplerKind::Tdl(s) => s.freq_response(t_s, freqs_hz),
            SamplerKind::Cdl(s) => s.freq_response(t_s, freqs_hz),
        }
    }

    /// Scaled power-delay profile: (delay seconds, linear power) per tap or
    /// cluster, powers summing to 1.
    pub fn power_delay_profile(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            SamplerKind::Tdl(s) => s.power_delay_profile(),
            SamplerKind::Cdl(s) => s.power_delay_profile(),
        }
    }

    /// Per-ray (doppler_hz, linear power) pairs, e.g. for the max-minus-min
    /// Doppler measure.
    pub fn ray_dopplers(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            SamplerKind::Tdl(s) => s.ray_dopplers(),
            SamplerKind::Cdl(s) => s.ray_dopplers(),
        }
    }
}

impl fmt::Debug for ChannelSampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            SamplerKind::Tdl(_) => "tdl",
            SamplerKind::Cdl(_) => "cdl",
        };
        write!(f, "ChannelSampler({kind}, {}x{})", self.num_rx, self.num_tx)
    }
}

/// RMS delay spread of a (delay, linear power) profile.
pub fn rms_delay_spread(profile: &[(f64, f64)]) -> f64 {
    let total: f64 = profile.iter().map(|&(_, p)| p).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean: f64 = profile.iter().map(|&(d, p)| d * p).sum::<f64>() / total;
    let var: f64 = profile
        .iter()
        .map(|&(d, p)| p * (d - mean) * (d - mean))
        .sum::<f64>()
        / total;
    libm::sqrt(var)
}

pub(crate) fn format_parse_err(line_no: usize, msg: &str) -> ChannelError {
    ChannelError::BadTable(format!("line {line_no}: {msg}"))
}
