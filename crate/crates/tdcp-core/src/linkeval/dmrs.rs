//! Slot-level channel-estimation error model for the DMRS density
//! use-case.
//!
//! Every channel coefficient (subcarrier × rx × tx) is observed at the DMRS
//! symbols with additive noise and linearly interpolated in time at the data
//! symbols (nearest-edge hold outside the pilot span). The per-symbol MSE is
//! normalized by the channel power so it plugs directly into the effective
//! SNR: `snr_eff = snr / (1 + snr · mse)`.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::precoder::EvalError;
use crate::channel::{ChannelSampler, ChannelTensor};
use crate::rng::{derive_seed, Stream};
use crate::trs::Numerology;

/// Per-symbol normalized estimation MSE over one slot (14 entries).
pub fn dmrs_estimate_mse(
    sampler: &ChannelSampler,
    slot_start_s: f64,
    num: &Numerology,
    dmrs_positions: &[u32],
    pdsch_snr_db: f64,
    freqs_hz: &[f64],
    seed: u64,
) -> Result<Vec<f64>, EvalError> {
    let nsym = num.symbols_per_slot as usize;
    if dmrs_positions.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if dmrs_positions.windows(2).any(|w| w[1] <= w[0])
        || dmrs_positions.iter().any(|&p| p as usize >= nsym)
    {
        return Err(EvalError::BadConfig(
            "DMRS positions must be sorted within the slot",
        ));
    }
    if freqs_hz.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let truth: Vec<ChannelTensor> = (0..nsym)
        .map(|s| sampler.freq_response(slot_start_s + s as f64 * num.symbol_duration_s, freqs_hz))
        .collect();
    let ncoef = truth[0].data.len();

    let noise_var = if pdsch_snr_db.is_infinite() && pdsch_snr_db > 0.0 {
        0.0
    } else {
        crate::math::db_to_linear(-pdsch_snr_db)
    };
    let sigma = libm::sqrt(noise_var / 2.0);

    // Noisy pilot observations; the noise stream is keyed by symbol index so
    // two position sets sharing a pilot symbol see identical noise.
    let mut pilots: Vec<(u32, Vec<Complex64>)> = Vec::with_capacity(dmrs_positions.len());
    for &p in dmrs_positions {
        let mut stream = Stream::new(derive_seed(seed, 0xd345, p as u64));
        let obs = truth[p as usize]
            .data
            .iter()
            .map(|&h| h + Complex64::new(stream.normal() * sigma, stream.normal() * sigma))
            .collect();
        pilots.push((p, obs));
    }

    let mut mse = Vec::with_capacity(nsym);
    for s in 0..nsym {
        let est = |k: usize| -> Complex64 {
            let s32 = s as u32;
            if s32 <= pilots[0].0 {
                return pilots[0].1[k];
            }
            if s32 >= pilots[pilots.len() - 1].0 {
                return pilots[pilots.len() - 1].1[k];
            }
            for w in pilots.windows(2) {
                let (p0, ref y0) = w[0];
                let (p1, ref y1) = w[1];
                if s32 >= p0 && s32 <= p1 {
                    let a = (s32 - p0) as f64 / (p1 - p0) as f64;
                    return y0[k] * (1.0 - a) + y1[k] * a;
                }
            }
            unreachable!()
        };
        let mut err = 0.0;
        let mut pow = 0.0;
        for k in 0..ncoef {
            let h = truth[s].data[k];
            err += (est(k) - h).norm_sqr();
            pow += h.norm_sqr();
        }
        mse.push(if pow > 0.0 { err / pow } else { 0.0 });
    }
    Ok(mse)
}

/// Spectral efficiency of a DMRS mode: data symbols carry
/// `log₂(1 + snr_eff)` with the per-symbol estimation penalty, scaled by the
/// data-symbol fraction of the slot.
pub fn dmrs_mode_se(mse: &[f64], dmrs_positions: &[u32], pdsch_snr_db: f64) -> f64 {
    let nsym = mse.len();
    let snr = crate::math::db_to_linear(pdsch_snr_db);
    let mut acc = 0.0;
    let mut data_count = 0usize;
    for s in 0..nsym {
        if dmrs_positions.contains(&(s as u32)) {
            continue;
        }
        let snr_eff = snr / (1.0 + snr * mse[s]);
        acc += libm::log2(1.0 + snr_eff);
        data_count += 1;
    }
    if data_count == 0 {
        return 0.0;
    }
    (data_count as f64 / nsym as f64) * (acc / data_count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TapProfile;
    use alloc::vec;
    use alloc::vec::Vec;

    fn freqs(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.4e6 - 2e6).collect()
    }

    #[test]
    fn static_infinite_snr_has_zero_mse() {
        let s = ChannelSampler::tdl(&TapProfile::single(), 0.0, 64, 1).unwrap();
        let num = Numerology::default_30khz();
        let mse = dmrs_estimate_mse(&s, 0.0, &num, &[2, 11], f64::INFINITY, &freqs(8), 9).unwrap();
        assert_eq!(mse.len(), 14);
        for m in &mse {
            // Interpolating two bit-identical pilots leaves only rounding.
            assert!(*m < 1e-24, "mse {m}");
        }
    }

    /// On a static channel with noise, interpolation averages two pilots, so
    /// mid-span symbols beat the pilot symbols themselves.
    #[test]
    fn interpolation_averages_noise_on_static_channel() {
        let num = Numerology::default_30khz();
        let mut pilot_mse = 0.0;
        let mut mid_mse = 0.0;
        for seed in 0..60 {
            let s = ChannelSampler::tdl(&TapProfile::single(), 0.0, 64, 100 + seed).unwrap();
            let mse = dmrs_estimate_mse(&s, 0.0, &num, &[2, 11], 0.0, &freqs(32), seed).unwrap();
            pilot_mse += mse[2] + mse[11];
            // Midpoint between pilots: symbols 6 and 7 get weights near 1/2,
            // where the interpolation noise variance is lowest.
            mid_mse += mse[6] + mse[7];
        }
        assert!(
            mid_mse < pilot_mse,
            "interpolated {mid_mse} should beat pilots {pilot_mse}"
        );
    }

    /// At 500 km/h the three-pilot layout tracks the channel better.
    #[test]
    fn fast_channel_prefers_denser_dmrs() {
        let num = Numerology::default_30khz();
        let fd = 500.0 / 3.6 * 3.5e9 / 299_792_458.0;
        let mut two = 0.0;
        let mut three = 0.0;
        for seed in 0..40 {
            let s = ChannelSampler::tdl(&TapProfile::single(), fd, 64, 500 + seed).unwrap();
            let m2 = dmrs_estimate_mse(&s, 0.0, &num, &[2, 11], 20.0, &freqs(16), seed).unwrap();
            let m3 = dmrs_estimate_mse(&s, 0.0, &num, &[2, 7, 11], 20.0, &freqs(16), seed).unwrap();
            two += m2.iter().sum::<f64>();
            three += m3.iter().sum::<f64>();
        }
        assert!(three < two, "3-pilot {three} vs 2-pilot {two}");
    }

    #[test]
    fn overhead_ratio_is_12_over_11_on_static_channel() {
        let mse = vec![0.0; 14];
        let se_low = dmrs_mode_se(&mse, &[2, 11], 18.0);
        let se_high = dmrs_mode_se(&mse, &[2, 7, 11], 18.0);
        assert!((se_low / se_high - 12.0 / 11.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_positions() {
        let s = ChannelSampler::tdl(&TapProfile::single(), 0.0, 64, 1).unwrap();
        let num = Numerology::default_30khz();
        assert!(dmrs_estimate_mse(&s, 0.0, &num, &[], 10.0, &freqs(4), 0).is_err());
        assert!(dmrs_estimate_mse(&s, 0.0, &num, &[11, 2], 10.0, &freqs(4), 0).is_err());
        assert!(dmrs_estimate_mse(&s, 0.0, &num, &[2, 14], 10.0, &freqs(4), 0).is_err());
    }
}
