//! OFDM numerology, TRS resource patterns and noisy channel observation.
//!
//! A TRS burst occupies two symbols (4 apart) in each of 2 adjacent slots on
//! a comb in frequency, repeating with a configured periodicity. Correlation
//! over a delay of 4 symbols or 1 slot is available from a single burst;
//! longer delays need a second TRS offset by the wanted delay, whose
//! periodicity is an integer multiple of the first. Pairing snapshots by
//! time difference therefore comes up empty exactly when the configuration
//! cannot support the requested delay.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::channel::ChannelSampler;
use crate::rng::{derive_seed, Stream};

#[derive(Debug, Clone, PartialEq)]
pub enum TrsError {
    InvalidNumerology(&'static str),
    InvalidConfig(&'static str),
}

impl fmt::Display for TrsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrsError::InvalidNumerology(msg) => write!(f, "invalid numerology: {msg}"),
            TrsError::InvalidConfig(msg) => write!(f, "invalid TRS config: {msg}"),
        }
    }
}

/// OFDM frame timing. The cyclic prefix is absorbed into the symbol
/// duration: 14 symbols exactly fill a slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerology {
    pub subcarrier_spacing_hz: f64,
    pub symbols_per_slot: u32,
    pub slot_duration_s: f64,
    pub symbol_duration_s: f64,
}

impl Numerology {
    /// Build from the subcarrier spacing (15·2^µ kHz → 1/2^µ ms slots).
    pub fn from_scs(scs_hz: f64) -> Result<Self, TrsError> {
        if !(scs_hz > 0.0) || !scs_hz.is_finite() {
            return Err(TrsError::InvalidNumerology(
                "subcarrier spacing must be > 0",
            ));
        }
        let slot = 1e-3 * 15e3 / scs_hz;
        Ok(Numerology {
            subcarrier_spacing_hz: scs_hz,
            symbols_per_slot: 14,
            slot_duration_s: slot,
            symbol_duration_s: slot / 14.0,
        })
    }

    /// 30 kHz spacing, 0.5 ms slots.
    pub fn default_30khz() -> Self {
        Self::from_scs(30e3).unwrap()
    }

    /// Absolute time of a symbol start.
    pub fn symbol_time(&self, slot: u64, symbol: u32) -> f64 {
        slot as f64 * self.slot_duration_s + symbol as f64 * self.symbol_duration_s
    }
}

/// TRS burst structure. Defaults: comb-4, symbols {4, 8}, 2 adjacent slots,
/// 40-slot (20 ms) periodicity.
#[derive(Debug, Clone, PartialEq)]
pub struct TrsConfig {
    pub comb_spacing: u32,
    pub comb_offset: u32,
    /// Two symbol indices per slot, exactly 4 apart.
    pub symbol_positions: [u32; 2],
    pub slots_per_burst: u32,
    pub burst_periodicity_slots: u32,
    /// Slot offset of the optional second TRS used for long correlation
    /// delays.
    pub second_trs_offset_slots: Option<u32>,
    /// Periodicity of the second TRS as a multiple of the first.
    pub second_trs_period_multiple: u32,
    pub bandwidth_prbs: u32,
}

impl Default for TrsConfig {
    fn default() -> Self {
        TrsConfig {
            comb_spacing: 4,
            comb_offset: 0,
            symbol_positions: [4, 8],
            slots_per_burst: 2,
            burst_periodicity_slots: 40,
            second_trs_offset_slots: None,
            second_trs_period_multiple: 1,
            bandwidth_prbs: 27,
        }
    }
}

impl TrsConfig {
    pub fn validate(&self) -> Result<(), TrsError> {
        if self.comb_spacing == 0 {
            return Err(TrsError::InvalidConfig("comb spacing must be > 0"));
        }
        if self.bandwidth_prbs == 0 {
            return Err(TrsError::InvalidConfig("bandwidth must be > 0 PRBs"));
        }
        let [a, b] = self.symbol_positions;
        if b <= a || b - a != 4 || b > 13 {
            return Err(TrsError::InvalidConfig(
                "symbol positions must be 4 symbols apart within a slot",
            ));
        }
        if self.slots_per_burst == 0 || self.burst_periodicity_slots < self.slots_per_burst {
            return Err(TrsError::InvalidConfig(
                "burst periodicity must cover the burst",
            ));
        }
        if self.second_trs_period_multiple == 0 {
            return Err(TrsError::InvalidConfig("period multiple must be >= 1"));
        }
        if let Some(off) = self.second_trs_offset_slots {
            if off < 2 || off >= self.burst_periodicity_slots {
                return Err(TrsError::InvalidConfig(
                    "second TRS offset must be >= 2 slots and inside the period",
                ));
            }
        }
        Ok(())
    }

    pub fn num_subcarriers(&self) -> usize {
        let total = self.bandwidth_prbs * 12;
        total
            .saturating_sub(self.comb_offset)
            .div_ceil(self.comb_spacing) as usize
    }

    /// Comb subcarrier indices within the configured band.
    pub fn comb_indices(&self) -> Vec<u32> {
        (self.comb_offset..self.bandwidth_prbs * 12)
            .step_by(self.comb_spacing as usize)
            .collect()
    }

    /// Baseband frequencies (Hz offsets from the carrier) of the comb REs,
    /// band centred on the carrier.
    pub fn comb_frequencies(&self, num: &Numerology) -> Vec<f64> {
        let total = (self.bandwidth_prbs * 12) as f64;
        self.comb_indices()
            .iter()
            .map(|&k| (k as f64 - total / 2.0) * num.subcarrier_spacing_hz)
            .collect()
    }
}

/// One TRS symbol instant with its comb layout.
#[derive(Debug, Clone, PartialEq)]
pub struct TrsOccasion {
    /// Sequence number within the generated list; seeds the observation
    /// noise stream.
    pub index: usize,
    pub time_s: f64,
    pub subcarrier_indices: Vec<u32>,
}

/// Generate every TRS symbol occasion whose time falls in `[start, end)`.
///
/// The primary TRS starts at slot 0; the optional second TRS is offset by
/// the configured number of slots and repeats with the configured multiple
/// of the primary periodicity.
pub fn trs_occasions(cfg: &TrsConfig, num: &Numerology, window: (f64, f64)) -> Vec<TrsOccasion> {
    let (start, end) = window;
    let mut times: Vec<f64> = Vec::new();
    if end > start {
        let mut push_trs = |offset_slots: u64, period_slots: u64| {
            let mut burst = 0u64;
            loop {
                let first_slot = offset_slots + burst * period_slots;
                let burst_start = num.symbol_time(first_slot, 0);
                if burst_start >= end {
                    break;
                }
                for s in 0..cfg.slots_per_burst as u64 {
                    for &sym in &cfg.symbol_positions {
                        let t = num.symbol_time(first_slot + s, sym);
                        if t >= start && t < end {
                            times.push(t);
                        }
                    }
                }
                burst += 1;
            }
        };
        push_trs(0, cfg.burst_periodicity_slots as u64);
        if let Some(off) = cfg.second_trs_offset_slots {
            push_trs(
                off as u64,
                (cfg.burst_periodicity_slots * cfg.second_trs_period_multiple) as u64,
            );
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let indices = cfg.comb_indices();
    times
        .into_iter()
        .enumerate()
        .map(|(index, time_s)| TrsOccasion {
            index,
            time_s,
            subcarrier_indices: indices.clone(),
        })
        .collect()
}

/// Noisy per-RE channel estimates at one occasion, (subcarrier × rx), taken
/// through the first tx element (the TRS port).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedSnapshot {
    pub time_s: f64,
    pub num_subcarriers: usize,
    pub num_rx: usize,
    /// Subcarrier-major: `estimates[sc * num_rx + rx]`.
    pub estimates: Vec<Complex64>,
    pub noise_variance: f64,
}

/// Observe the channel at a TRS occasion with raw least-squares per-RE
/// estimation: estimate = true channel + CN(0, σ²) with σ² set by the SNR
/// against the unit mean channel power. Deterministic per (seed, occasion).
pub fn observe(
    sampler: &ChannelSampler,
    occasion: &TrsOccasion,
    freqs_hz: &[f64],
    snr_db: f64,
    seed: u64,
) -> ObservedSnapshot {
    let h = sampler.freq_response(occasion.time_s, freqs_hz);
    let num_rx = sampler.num_rx();
    let noise_variance = if snr_db.is_infinite() && snr_db > 0.0 {
        0.0
    } else {
        crate::math::db_to_linear(-snr_db)
    };
    let mut stream = Stream::new(derive_seed(seed, 0x0b5e, occasion.index as u64));
    let sigma = libm::sqrt(noise_variance / 2.0);
    let mut estimates = Vec::with_capacity(freqs_hz.len() * num_rx);
    for sc in 0..freqs_hz.len() {
        for rx in 0..num_rx {
            let n = Complex64::new(stream.normal() * sigma, stream.normal() * sigma);
            estimates.push(h.at(sc, rx, 0) + n);
        }
    }
    ObservedSnapshot {
        time_s: occasion.time_s,
        num_subcarriers: freqs_hz.len(),
        num_rx,
        estimates,
        noise_variance,
    }
}

/// Optional boxcar smoothing across frequency (width REs, odd). Off by
/// default in scenarios so the noise floor stays visible in the metric.
pub fn smooth_freq(snap: &ObservedSnapshot, width: usize) -> ObservedSnapshot {
    if width <= 1 {
        return snap.clone();
    }
    let half = width / 2;
    let n = snap.num_subcarriers;
    let mut estimates = Vec::with_capacity(snap.estimates.len());
    for sc in 0..n {
        let lo = sc.saturating_sub(half);
        let hi = (sc + half + 1).min(n);
        for rx in 0..snap.num_rx {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in lo..hi {
                acc += snap.estimates[k * snap.num_rx + rx];
            }
            estimates.push(acc / (hi - lo) as f64);
        }
    }
    ObservedSnapshot {
        time_s: snap.time_s,
        num_subcarriers: n,
        num_rx: snap.num_rx,
        estimates,
        // Nominal interior-window reduction; edge windows are slightly
        // noisier.
        noise_variance: snap.noise_variance / width as f64,
    }
}

/// All index pairs (i, j), i before j, whose time difference matches `delay`
/// within `tolerance`, in time order.
pub fn pair_indices_by_delay(times: &[f64], delay_s: f64, tolerance_s: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..times.len() {
        for j in (i + 1)..times.len() {
            let dt = times[j] - times[i];
            let err = dt - delay_s;
            if err >= -tolerance_s && err <= tolerance_s {
                out.push((i, j));
            }
        }
    }
    out
}

/// Pair occasions by delay; empty when the configuration cannot support the
/// delay (the caller treats that as a configuration error).
pub fn occasion_pairs(
    occasions: &[TrsOccasion],
    delay_s: f64,
    tolerance_s: f64,
) -> Vec<(usize, usize)> {
    let times: Vec<f64> = occasions.iter().map(|o| o.time_s).collect();
    pair_indices_by_delay(&times, delay_s, tolerance_s)
}

/// Pair observed snapshots by delay.
pub fn snapshot_pairs(
    snapshots: &[ObservedSnapshot],
    delay_s: f64,
    tolerance_s: f64,
) -> Vec<(&ObservedSnapshot, &ObservedSnapshot)> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.time_s).collect();
    pair_indices_by_delay(&times, delay_s, tolerance_s)
        .into_iter()
        .map(|(i, j)| (&snapshots[i], &snapshots[j]))
        .collect()
}

/// Default pairing tolerance: half a symbol.
pub fn default_pair_tolerance(num: &Numerology) -> f64 {
    num.symbol_duration_s / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TapProfile;
    use alloc::vec;

    #[test]
    fn numerology_defaults_match_30khz() {
        let n = Numerology::default_30khz();
        assert!((n.slot_duration_s - 0.5e-3).abs() < 1e-15);
        assert!((n.symbol_duration_s * 14.0 - n.slot_duration_s).abs() < 1e-18);
    }

    #[test]
    fn default_burst_has_four_occasions_per_period() {
        let cfg = TrsConfig::default();
        cfg.validate().unwrap();
        let num = Numerology::default_30khz();
        let period = cfg.burst_periodicity_slots as f64 * num.slot_duration_s;
        let occ = trs_occasions(&cfg, &num, (0.0, period));
        assert_eq!(occ.len(), 4);
        // Strictly increasing times.
        for w in occ.windows(2) {
            assert!(w[1].time_s > w[0].time_s);
        }
        // Three periods → 12.
        let occ3 = trs_occasions(&cfg, &num, (0.0, 3.0 * period));
        assert_eq!(occ3.len(), 12);
    }

    #[test]
    fn empty_window_gives_empty_list() {
        let cfg = TrsConfig::default();
        let num = Numerology::default_30khz();
        assert!(trs_occasions(&cfg, &num, (1.0, 1.0)).is_empty());
        assert!(trs_occasions(&cfg, &num, (2.0, 1.0)).is_empty());
    }

    #[test]
    fn second_trs_creates_pairs_at_its_offset() {
        let cfg = TrsConfig {
            second_trs_offset_slots: Some(10),
            ..TrsConfig::default()
        };
        cfg.validate().unwrap();
        let num = Numerology::default_30khz();
        let period = cfg.burst_periodicity_slots as f64 * num.slot_duration_s;
        let occ = trs_occasions(&cfg, &num, (0.0, period));
        assert_eq!(occ.len(), 8);
        let tol = default_pair_tolerance(&num);
        let pairs = occasion_pairs(&occ, 10.0 * num.slot_duration_s, tol);
        assert!(!pairs.is_empty());
        for &(i, j) in &pairs {
            let dt = occ[j].time_s - occ[i].time_s;
            assert!((dt - 10.0 * num.slot_duration_s).abs() <= tol);
        }
    }

    #[test]
    fn pairing_matches_spec_examples() {
        let cfg = TrsConfig::default();
        let num = Numerology::default_30khz();
        let occ = trs_occasions(&cfg, &num, (0.0, 20e-3));
        let tol = default_pair_tolerance(&num);

        // Delay of 4 symbols: the intra-slot symbol pairs.
        let four_os = 4.0 * num.symbol_duration_s;
        let p = occasion_pairs(&occ, four_os, tol);
        assert_eq!(p.len(), 2); // one per slot of the burst
        assert_eq!(p[0], (0, 1));

        // Delay of 1 slot: cross-slot pairs.
        let p = occasion_pairs(&occ, num.slot_duration_s, tol);
        assert_eq!(p.len(), 2);

        // Delay of 3 slots without a second TRS: nothing.
        let p = occasion_pairs(&occ, 3.0 * num.slot_duration_s, tol);
        assert!(p.is_empty());
    }

    #[test]
    fn config_validation_catches_bad_shapes() {
        let mut cfg = TrsConfig::default();
        cfg.symbol_positions = [4, 9];
        assert!(cfg.validate().is_err());
        let mut cfg = TrsConfig::default();
        cfg.second_trs_offset_slots = Some(1);
        assert!(cfg.validate().is_err());
        let mut cfg = TrsConfig::default();
        cfg.comb_spacing = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn infinite_snr_reproduces_the_channel() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 20.0, 64, 3).unwrap();
        let cfg = TrsConfig::default();
        let num = Numerology::default_30khz();
        let occ = trs_occasions(&cfg, &num, (0.0, 1e-3));
        let freqs = cfg.comb_frequencies(&num);
        let snap = observe(&sampler, &occ[0], &freqs, f64::INFINITY, 77);
        let h = sampler.freq_response(occ[0].time_s, &freqs);
        for sc in 0..freqs.len() {
            assert_eq!(snap.estimates[sc], h.at(sc, 0, 0));
        }
        assert_eq!(snap.noise_variance, 0.0);
    }

    #[test]
    fn noise_variance_calibrates_at_0db() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 5.0, 64, 9).unwrap();
        let cfg = TrsConfig {
            bandwidth_prbs: 100,
            ..TrsConfig::default()
        };
        let num = Numerology::default_30khz();
        let freqs = cfg.comb_frequencies(&num);
        let occ = trs_occasions(&cfg, &num, (0.0, 200e-3));
        let mut err_power = 0.0;
        let mut count = 0usize;
        for (k, o) in occ.iter().enumerate() {
            let snap = observe(&sampler, o, &freqs, 0.0, 1000 + k as u64);
            let h = sampler.freq_response(o.time_s, &freqs);
            for sc in 0..freqs.len() {
                err_power += (snap.estimates[sc] - h.at(sc, 0, 0)).norm_sqr();
                count += 1;
            }
        }
        assert!(count >= 10_000, "need >= 1e4 REs, got {count}");
        let measured = err_power / count as f64;
        assert!(
            (measured - 1.0).abs() < 0.05,
            "measured noise variance {measured}"
        );
    }

    #[test]
    fn trs_to_pdsch_noise_ratio_matches_db_arithmetic() {
        let v_trs = crate::math::db_to_linear(2.0); // -(-2 dB)
        let v_pdsch = crate::math::db_to_linear(-10.0);
        let ratio = v_trs / v_pdsch;
        assert!((ratio - 15.8489).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn observation_is_deterministic_per_seed_and_occasion() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 20.0, 64, 3).unwrap();
        let cfg = TrsConfig::default();
        let num = Numerology::default_30khz();
        let occ = trs_occasions(&cfg, &num, (0.0, 20e-3));
        let freqs = cfg.comb_frequencies(&num);
        let a = observe(&sampler, &occ[0], &freqs, 10.0, 5);
        let b = observe(&sampler, &occ[0], &freqs, 10.0, 5);
        assert_eq!(a, b);
        let c = observe(&sampler, &occ[1], &freqs, 10.0, 5);
        assert_ne!(a.estimates, c.estimates);
    }

    #[test]
    fn smoothing_reduces_noise() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 0.0, 64, 3).unwrap();
        let cfg = TrsConfig {
            bandwidth_prbs: 50,
            ..TrsConfig::default()
        };
        let num = Numerology::default_30khz();
        let freqs = cfg.comb_frequencies(&num);
        let occ = trs_occasions(&cfg, &num, (0.0, 1e-3));
        let h = sampler.freq_response(occ[0].time_s, &freqs);
        let raw = observe(&sampler, &occ[0], &freqs, 0.0, 42);
        let smooth = smooth_freq(&raw, 5);
        let err = |s: &ObservedSnapshot| -> f64 {
            (0..freqs.len())
                .map(|sc| (s.estimates[sc] - h.at(sc, 0, 0)).norm_sqr())
                .sum()
        };
        assert!(err(&smooth) < err(&raw) * 0.5);
        assert_eq!(smooth_freq(&raw, 1), raw);
    }

    #[test]
    fn pairing_tolerates_and_orders() {
        let times = vec![0.0, 1.0, 2.0, 3.5];
        let p = pair_indices_by_delay(&times, 1.0, 0.01);
        assert_eq!(p, vec![(0, 1), (1, 2)]);
        let p = pair_indices_by_delay(&times, 1.5, 0.01);
        assert_eq!(p, vec![(2, 3)]);
        assert!(pair_indices_by_delay(&times, 9.0, 0.01).is_empty());
    }
}
