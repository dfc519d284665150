//! Throughput-proxy evaluation of the two studied switching use-cases:
//! CSI Type-I vs Type-II precoding under feedback aging, and 1 vs 2
//! additional DMRS symbols under intra-slot channel variation.
//!
//! Throughput is a log-det capacity proxy, not a coded-BLER simulation;
//! orderings and crossover locations are the meaningful outputs, not the
//! absolute numbers.

pub mod dmrs;
pub mod linalg;
pub mod measure;
pub mod precoder;
pub mod usecase;

pub use dmrs::{dmrs_estimate_mse, dmrs_mode_se};
pub use linalg::{log2_det_hermitian, svd_right, CMat};
pub use measure::{measure_tdcp_multi, port_observation, TdcpMeasurement};
pub use precoder::{precoder_type1, precoder_type2, EvalError, PrecoderReport, PrecoderType};
pub use usecase::*;

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::channel::{ChannelSampler, ChannelTensor};
use crate::trs::Numerology;

/// One slot's spectral efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputSample {
    pub spectral_efficiency_bpshz: f64,
    pub slot_index: u32,
}

/// Stack the per-subcarrier rx×tx matrices vertically into ((sc·rx) × tx):
/// ‖H_stacked·w‖² then sums the per-subcarrier beamforming gains, which is
/// what wideband precoder selection maximizes.
pub fn stacked_channel(tensor: &ChannelTensor) -> CMat {
    let mut m = CMat::zeros(tensor.num_sc * tensor.num_rx, tensor.num_tx);
    for sc in 0..tensor.num_sc {
        for rx in 0..tensor.num_rx {
            for tx in 0..tensor.num_tx {
                m.set(sc * tensor.num_rx + rx, tx, tensor.at(sc, rx, tx));
            }
        }
    }
    m
}

/// Mean over the frequency grid of log₂ det(I + (SNR/rank)·(HW)(HW)ᴴ).
pub fn spectral_efficiency(tensor: &ChannelTensor, w: &CMat, pdsch_snr_db: f64) -> f64 {
    let rank = w.cols;
    let snr = crate::math::db_to_linear(pdsch_snr_db);
    let per_layer = snr / rank as f64;
    let mut acc = 0.0;
    for sc in 0..tensor.num_sc {
        // G = H_sc · W (rx × rank).
        let mut g = CMat::zeros(tensor.num_rx, rank);
        for rx in 0..tensor.num_rx {
            for c in 0..rank {
                let mut v = Complex64::new(0.0, 0.0);
                for tx in 0..tensor.num_tx {
                    v += tensor.at(sc, rx, tx) * w.at(tx, c);
                }
                g.set(rx, c, v);
            }
        }
        // M = I + per_layer · G·Gᴴ.
        let mut m = CMat::zeros(tensor.num_rx, tensor.num_rx);
        for r in 0..tensor.num_rx {
            for c in 0..tensor.num_rx {
                let mut v = Complex64::new(0.0, 0.0);
                for k in 0..rank {
                    v += g.at(r, k) * g.at(c, k).conj();
                }
                v *= per_layer;
                if r == c {
                    v += Complex64::new(1.0, 0.0);
                }
                m.set(r, c, v);
            }
        }
        acc += log2_det_hermitian(&m);
    }
    acc / tensor.num_sc as f64
}

/// Period-average spectral efficiency of several precoders evaluated on the
/// same aging channel (one tensor per slot, shared across precoders).
pub fn aged_throughput_multi(
    sampler: &ChannelSampler,
    precoders: &[&CMat],
    pdsch_snr_db: f64,
    feedback_period_slots: u32,
    num: &Numerology,
    t0_s: f64,
    freqs_hz: &[f64],
) -> Vec<f64> {
    let mut acc = alloc::vec![0.0; precoders.len()];
    for k in 0..feedback_period_slots {
        let t = t0_s + k as f64 * num.slot_duration_s;
        let tensor = sampler.freq_response(t, freqs_hz);
        for (i, w) in precoders.iter().enumerate() {
            acc[i] += spectral_efficiency(&tensor, w, pdsch_snr_db);
        }
    }
    acc.iter()
        .map(|a| a / feedback_period_slots as f64)
        .collect()
}

/// Period-average spectral efficiency of one report over the feedback
/// period starting at its compute time.
pub fn aged_throughput(
    sampler: &ChannelSampler,
    report: &PrecoderReport,
    pdsch_snr_db: f64,
    feedback_period_slots: u32,
    num: &Numerology,
    freqs_hz: &[f64],
) -> f64 {
    aged_throughput_multi(
        sampler,
        &[&report.matrix],
        pdsch_snr_db,
        feedback_period_slots,
        num,
        report.computed_at_s,
        freqs_hz,
    )[0]
}

/// Per-slot samples for one report.
pub fn aged_throughput_per_slot(
    sampler: &ChannelSampler,
    report: &PrecoderReport,
    pdsch_snr_db: f64,
    feedback_period_slots: u32,
    num: &Numerology,
    freqs_hz: &[f64],
) -> Vec<ThroughputSample> {
    (0..feedback_period_slots)
        .map(|k| {
            let t = report.computed_at_s + k as f64 * num.slot_duration_s;
            let tensor = sampler.freq_response(t, freqs_hz);
            ThroughputSample {
                spectral_efficiency_bpshz: spectral_efficiency(
                    &tensor,
                    &report.matrix,
                    pdsch_snr_db,
                ),
                slot_index: k,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::TapProfile;
    use alloc::vec::Vec;

    fn freqs(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 * 0.5e6 - 2e6).collect()
    }

    #[test]
    fn static_channel_keeps_constant_se() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 0.0, 64, 4).unwrap();
        let num = Numerology::default_30khz();
        let h = sampler.freq_response(0.0, &freqs(4));
        let w = precoder_type2(&stacked_channel(&h), 1, 0.0).unwrap();
        let per_slot = aged_throughput_per_slot(&sampler, &w, 10.0, 20, &num, &freqs(4));
        let first = per_slot[0].spectral_efficiency_bpshz;
        assert!(first > 0.0);
        for s in &per_slot {
            assert!((s.spectral_efficiency_bpshz - first).abs() < 1e-9);
        }
        let mean = aged_throughput(&sampler, &w, 10.0, 20, &num, &freqs(4));
        assert!((mean - first).abs() < 1e-9);
    }

    #[test]
    fn vanishing_snr_kills_throughput() {
        let sampler = ChannelSampler::tdl(&TapProfile::single(), 10.0, 64, 4).unwrap();
        let num = Numerology::default_30khz();
        let h = sampler.freq_response(0.0, &freqs(4));
        let w = precoder_type2(&stacked_channel(&h), 1, 0.0).unwrap();
        let se = aged_throughput(&sampler, &w, -120.0, 4, &num, &freqs(4));
        assert!(se < 1e-6, "SE at -120 dB was {se}");
    }

    /// With a precoder fixed at t₀, the period-mean SE trends down in speed.
    /// Needs a spatial channel: a stale beam loses gain as the channel
    /// decorrelates.
    #[test]
    fn aged_se_decreases_with_speed() {
        use crate::channel::{AntennaArray, CdlParams, CdlTable, VelocityVector};
        let table = CdlTable::parse(include_str!("../../../../data/cdl_a.txt")).unwrap();
        let num = Numerology::default_30khz();
        let grid = freqs(4);
        let mut means = Vec::new();
        for &speed in &[3.0, 30.0, 120.0] {
            let mut acc = 0.0;
            let drops = 200;
            for seed in 0..drops {
                let params = CdlParams {
                    table: &table,
                    delay_spread_s: 100e-9,
                    asa_deg: 45.0,
                    zsa_deg: 10.0,
                    tx: AntennaArray::bs_default(),
                    rx: AntennaArray::ue_default(),
                    velocity: VelocityVector::from_kmh(speed, (seed % 8) as f64 * 45.0).unwrap(),
                    carrier_hz: 3.5e9,
                };
                let sampler = ChannelSampler::cdl(&params, 9000 + seed).unwrap();
                let h = sampler.freq_response(0.0, &grid);
                let w = precoder_type2(&stacked_channel(&h), 1, 0.0).unwrap();
                acc += aged_throughput(&sampler, &w, 10.0, 20, &num, &grid);
            }
            means.push(acc / drops as f64);
        }
        assert!(
            means[0] > means[1] && means[1] > means[2],
            "means not decreasing: {means:?}"
        );
    }
}
