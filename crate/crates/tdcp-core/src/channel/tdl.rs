//! Sum-of-rays Jakes taps for the tapped-delay-line model.
//!
//! Each tap is
//!
//! ```text
//! g(t) = (1/sqrt(N)) Σ_k exp(j·(2π·f_D·cos(α_k)·t + φ_k))
//! ```
//!
//! with N arrival angles α_k spaced uniformly around the circle plus a random
//! per-tap rotation, and independent uniform initial phases φ_k. The uniform
//! spacing makes the per-realization deterministic part of the tap
//! autocorrelation an N-point quadrature of the circle integral, so the
//! ensemble autocorrelation converges to J₀(2π·f_D·Δt) extremely fast in N.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{ChannelError, ChannelTensor, TapProfile};
use crate::rng::{derive_seed, Stream};

struct TapState {
    delay_s: f64,
    power: f64,
    /// Per-ray Doppler shifts (Hz).
    ray_doppler_hz: Vec<f64>,
    /// Per-ray initial phases.
    ray_phase: Vec<f64>,
}

pub(super) struct TdlSampler {
    taps: Vec<TapState>,
    num_rays: usize,
}

impl TdlSampler {
    pub(super) fn new(
        profile: &TapProfile,
        max_doppler_hz: f64,
        num_rays: usize,
        seed: u64,
    ) -> Result<Self, ChannelError> {
        if !(max_doppler_hz >= 0.0) || !max_doppler_hz.is_finite() {
            return Err(ChannelError::NegativeDoppler);
        }
        if num_rays < 8 {
            return Err(ChannelError::TooFewRays);
        }
        let taps = profile
            .taps()
            .iter()
            .enumerate()
            .map(|(i, &(delay_s, power))| {
                let mut stream = Stream::new(derive_seed(seed, 0x7d1, i as u64));
                let rotation = stream.angle();
                let ray_doppler_hz = (0..num_rays)
                    .map(|k| {
                        let alpha = 2.0 * PI * k as f64 / num_rays as f64 + rotation;
                        max_doppler_hz * libm::cos(alpha)
                    })
                    .collect();
                let ray_phase = (0..num_rays).map(|_| stream.angle()).collect();
                TapState {
                    delay_s,
                    power,
                    ray_doppler_hz,
                    ray_phase,
                }
            })
            .collect();
        Ok(TdlSampler { taps, num_rays })
    }

    fn tap_gain(&self, tap: &TapState, t_s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&f, &p0) in tap.ray_doppler_hz.iter().zip(tap.ray_phase.iter()) {
            let (s, c) = libm::sincos(2.0 * PI * f * t_s + p0);
            acc += Complex64::new(c, s);
        }
        acc * libm::sqrt(tap.power / self.num_rays as f64)
    }

    pub(super) fn freq_response(&self, t_s: f64, freqs_hz: &[f64]) -> ChannelTensor {
        let gains: Vec<(f64, Complex64)> = self
            .taps
            .iter()
            .map(|tap| (tap.delay_s, self.tap_gain(tap, t_s)))
            .collect();
        let mut out = ChannelTensor::zeros(freqs_hz.len(), 1, 1);
        for (i, &f) in freqs_hz.iter().enumerate() {
            let mut h = Complex64::new(0.0, 0.0);
            for &(delay, g) in &gains {
                let (s, c) = libm::sincos(-2.0 * PI * f * delay);
                h += g * Complex64::new(c, s);
            }
            out.data[i] = h;
        }
        out
    }

    pub(super) fn power_delay_profile(&self) -> Vec<(f64, f64)> {
        self.taps.iter().map(|t| (t.delay_s, t.power)).collect()
    }

    pub(super) fn ray_dopplers(&self) -> Vec<(f64, f64)> {
        let per_ray = 1.0 / self.num_rays as f64;
        self.taps
            .iter()
            .flat_map(|t| {
                t.ray_doppler_hz
                    .iter()
                    .map(move |&f| (f, t.power * per_ray))
            })
            .collect()
    }
}
