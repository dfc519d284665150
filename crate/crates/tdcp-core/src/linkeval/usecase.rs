//! Per-drop evaluation and aggregation for the two switching studies.
//!
//! Drops are independent: each (speed, drop) pair derives its own channel
//! and noise seeds, so they can be evaluated in any order (or in parallel)
//! and reduced in drop-index order for reproducible results.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::dmrs::{dmrs_estimate_mse, dmrs_mode_se};
use super::measure::{measure_tdcp_multi, MeasureConfig};
use super::precoder::{precoder_type1, precoder_type2, EvalError, PrecoderReport};
use super::{aged_throughput_multi, spectral_efficiency, stacked_channel};
use crate::channel::{AntennaArray, CdlParams, CdlTable, ChannelSampler, VelocityVector};
use crate::policy::{CalibrationSample, SwitchingPolicy};
use crate::report::TdcpDelay;
use crate::rng::derive_seed;
use crate::trs::{Numerology, TrsConfig};

/// Inputs shared by both use-cases.
#[derive(Debug, Clone)]
pub struct EvalParams {
    pub numerology: Numerology,
    pub carrier_hz: f64,
    pub table: CdlTable,
    pub delay_spread_s: f64,
    pub asa_deg: f64,
    pub zsa_deg: f64,
    pub tx_array: AntennaArray,
    pub rx_array: AntennaArray,
    pub directions_deg: Vec<f64>,
    pub drops: usize,
    pub trs: TrsConfig,
    pub trs_snr_db: f64,
    pub pdsch_snr_db: f64,
    pub feedback_period_slots: u32,
    pub pdsch_freqs: Vec<f64>,
    /// TRS periods observed before the feedback instant.
    pub measure_periods: u32,
    pub bias_correction: bool,
    /// Boxcar width of the optional frequency smoother; 1 = off.
    pub smoother_width: usize,
    pub type1_oversampling: usize,
    pub seed: u64,
}

impl EvalParams {
    fn sampler_for(
        &self,
        label: u64,
        speed_kmh: f64,
        speed_idx: usize,
        drop_idx: usize,
    ) -> Result<(ChannelSampler, u64), EvalError> {
        let dir = self.directions_deg[drop_idx % self.directions_deg.len()];
        let velocity = VelocityVector::from_kmh(speed_kmh, dir)
            .map_err(|_| EvalError::BadConfig("invalid velocity"))?;
        let params = CdlParams {
            table: &self.table,
            delay_spread_s: self.delay_spread_s,
            asa_deg: self.asa_deg,
            zsa_deg: self.zsa_deg,
            tx: self.tx_array.clone(),
            rx: self.rx_array.clone(),
            velocity,
            carrier_hz: self.carrier_hz,
        };
        let seed = derive_seed(
            self.seed,
            label,
            ((speed_idx as u64) << 32) | drop_idx as u64,
        );
        let sampler =
            ChannelSampler::cdl(&params, seed).map_err(|_| EvalError::BadConfig("bad channel"))?;
        Ok((sampler, seed))
    }

    fn measure_config(&self) -> MeasureConfig {
        MeasureConfig {
            trs_snr_db: self.trs_snr_db,
            bias_correction: self.bias_correction,
            smoother_width: self.smoother_width,
        }
    }

    /// Feedback instant: after the configured number of TRS periods.
    fn feedback_time(&self) -> f64 {
        self.measure_periods as f64
            * self.trs.burst_periodicity_slots as f64
            * self.numerology.slot_duration_s
    }
}

#[derive(Debug, Clone)]
pub struct UsecaseAParams {
    pub common: EvalParams,
    pub speeds_kmh: Vec<f64>,
    /// Candidate switching delays measured per drop.
    pub delays: Vec<TdcpDelay>,
    /// Consecutive feedback periods simulated per drop; CSI refreshes and
    /// the switched scheme re-decides at each period start.
    pub periods_per_drop: usize,
}

/// One feedback period: fresh CSI at the period start, aged over the
/// period, with the metric measured from the TRS window preceding it.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodOutcomeA {
    pub se_type1: f64,
    pub se_type2: f64,
    /// Averaged metric per configured delay; `None` when the TRS pattern
    /// cannot pair at the delay.
    pub metrics: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcomeA {
    pub periods: Vec<PeriodOutcomeA>,
}

impl DropOutcomeA {
    pub fn mean_se_type1(&self) -> f64 {
        mean(self.periods.iter().map(|p| p.se_type1))
    }

    pub fn mean_se_type2(&self) -> f64 {
        mean(self.periods.iter().map(|p| p.se_type2))
    }

    /// Drop-level genie: the better of the two schemes over the whole drop.
    pub fn genie_se(&self) -> f64 {
        self.mean_se_type1().max(self.mean_se_type2())
    }

    fn genie_is_high(&self) -> bool {
        self.mean_se_type2() >= self.mean_se_type1()
    }
}

/// TRS pattern used for one switching delay: delays above 1 slot require
/// the second TRS at the matching offset.
pub fn trs_for_delay(base: &TrsConfig, delay: TdcpDelay) -> TrsConfig {
    let mut trs = base.clone();
    trs.second_trs_offset_slots = match delay {
        TdcpDelay::Slots(n) if n >= 2 => Some(n as u32),
        _ => None,
    };
    trs
}

/// Evaluate one drop of the precoding-type study: a sequence of feedback
/// periods on one channel realization. Each period ends a TRS measurement
/// window; CSI of both types is taken at the period start and aged over the
/// feedback period.
pub fn usecase_a_drop(
    p: &UsecaseAParams,
    speed_idx: usize,
    drop_idx: usize,
) -> Result<DropOutcomeA, EvalError> {
    if p.periods_per_drop == 0 {
        return Err(EvalError::BadConfig("periods_per_drop must be >= 1"));
    }
    let c = &p.common;
    let (sampler, drop_seed) =
        c.sampler_for(0xa10, p.speeds_kmh[speed_idx], speed_idx, drop_idx)?;
    let t_meas = c.feedback_time();
    let max_rank = sampler.num_rx().min(2);

    let mut periods = Vec::with_capacity(p.periods_per_drop);
    for period in 0..p.periods_per_drop {
        let window = (period as f64 * t_meas, (period + 1) as f64 * t_meas);
        let t_fb = window.1;

        let mut metrics = Vec::with_capacity(p.delays.len());
        for (di, &delay) in p.delays.iter().enumerate() {
            let trs = trs_for_delay(&c.trs, delay);
            let obs_seed = derive_seed(drop_seed, 0x0b51, (di as u64) << 32 | period as u64);
            let m = measure_tdcp_multi(
                &sampler,
                &trs,
                &c.numerology,
                window,
                &[delay.seconds(&c.numerology)],
                &c.measure_config(),
                obs_seed,
            );
            metrics.push(m[0].mean_amplitude);
        }

        // CSI at the feedback instant, rank adapted on the period-start SE.
        let h_fb = sampler.freq_response(t_fb, &c.pdsch_freqs);
        let stacked = stacked_channel(&h_fb);
        let best_of = |reports: Vec<PrecoderReport>| -> PrecoderReport {
            reports
                .into_iter()
                .map(|r| {
                    let se = spectral_efficiency(&h_fb, &r.matrix, c.pdsch_snr_db);
                    (se, r)
                })
                .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
                .expect("at least rank 1")
                .1
        };
        let type2 = best_of(
            (1..=max_rank)
                .map(|r| precoder_type2(&stacked, r, t_fb))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let type1 = best_of(
            (1..=max_rank)
                .map(|r| precoder_type1(&stacked, &c.tx_array, c.type1_oversampling, r, t_fb))
                .collect::<Result<Vec<_>, _>>()?,
        );

        let ses = aged_throughput_multi(
            &sampler,
            &[&type1.matrix, &type2.matrix],
            c.pdsch_snr_db,
            c.feedback_period_slots,
            &c.numerology,
            t_fb,
            &c.pdsch_freqs,
        );
        periods.push(PeriodOutcomeA {
            se_type1: ses[0],
            se_type2: ses[1],
            metrics,
        });
    }
    Ok(DropOutcomeA { periods })
}

/// Drive one use-case-A sweep through a caller-supplied executor: the
/// closure returns the per-drop results of one speed in drop-index order
/// (simple loop or a parallel map — the reduction is order-fixed either
/// way).
pub fn run_usecase_a_with(
    p: &UsecaseAParams,
    run_speed: impl Fn(usize, usize) -> Vec<Result<DropOutcomeA, EvalError>>,
) -> Result<Vec<Vec<DropOutcomeA>>, EvalError> {
    p.speeds_kmh
        .iter()
        .enumerate()
        .map(|(si, _)| run_speed(si, p.common.drops).into_iter().collect())
        .collect()
}

/// Sequential reference runner; the CLI parallelizes over the same drop
/// function and reduces in identical order.
pub fn run_usecase_a(p: &UsecaseAParams) -> Result<Vec<Vec<DropOutcomeA>>, EvalError> {
    run_usecase_a_with(p, |si, drops| {
        (0..drops).map(|di| usecase_a_drop(p, si, di)).collect()
    })
}

#[derive(Debug, Clone)]
pub struct UsecaseBParams {
    pub common: EvalParams,
    pub speeds_kmh: Vec<f64>,
    /// DMRS symbol positions of the sparse mode (1+1 additional).
    pub dmrs_low: Vec<u32>,
    /// DMRS symbol positions of the dense mode (1+2 additional).
    pub dmrs_high: Vec<u32>,
    /// Consecutive data slots evaluated per drop (one mode decision from
    /// the single TRS burst applies to all of them).
    pub slots_per_drop: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropOutcomeB {
    /// SE with 1+1 additional DMRS (sparse pilots).
    pub se_sparse: f64,
    /// SE with 1+2 additional DMRS (dense pilots).
    pub se_dense: f64,
    /// 4-symbol-delay metric from a single TRS burst.
    pub metric: Option<f64>,
}

/// Evaluate one drop of the DMRS density study.
pub fn usecase_b_drop(
    p: &UsecaseBParams,
    speed_idx: usize,
    drop_idx: usize,
) -> Result<DropOutcomeB, EvalError> {
    let c = &p.common;
    let (sampler, drop_seed) =
        c.sampler_for(0xb10, p.speeds_kmh[speed_idx], speed_idx, drop_idx)?;

    // Metric over 4 symbols from the single burst at the window start.
    let trs = trs_for_delay(&c.trs, TdcpDelay::FourSymbols);
    let window = (
        0.0,
        c.trs.burst_periodicity_slots as f64 * c.numerology.slot_duration_s,
    );
    let delay_s = TdcpDelay::FourSymbols.seconds(&c.numerology);
    let m = measure_tdcp_multi(
        &sampler,
        &trs,
        &c.numerology,
        window,
        &[delay_s],
        &c.measure_config(),
        derive_seed(drop_seed, 0x0b51, 0),
    );

    // Estimation + data slots right after the burst.
    if p.slots_per_drop == 0 {
        return Err(EvalError::BadConfig("slots_per_drop must be >= 1"));
    }
    let mut se_sparse = 0.0;
    let mut se_dense = 0.0;
    for slot in 0..p.slots_per_drop {
        let slot_start =
            (c.trs.slots_per_burst as u64 + slot as u64) as f64 * c.numerology.slot_duration_s;
        let dmrs_seed = derive_seed(drop_seed, 0xd319, slot as u64);
        let mse_sparse = dmrs_estimate_mse(
            &sampler,
            slot_start,
            &c.numerology,
            &p.dmrs_low,
            c.pdsch_snr_db,
            &c.pdsch_freqs,
            dmrs_seed,
        )?;
        let mse_dense = dmrs_estimate_mse(
            &sampler,
            slot_start,
            &c.numerology,
            &p.dmrs_high,
            c.pdsch_snr_db,
            &c.pdsch_freqs,
            dmrs_seed,
        )?;
        se_sparse += dmrs_mode_se(&mse_sparse, &p.dmrs_low, c.pdsch_snr_db);
        se_dense += dmrs_mode_se(&mse_dense, &p.dmrs_high, c.pdsch_snr_db);
    }
    Ok(DropOutcomeB {
        se_sparse: se_sparse / p.slots_per_drop as f64,
        se_dense: se_dense / p.slots_per_drop as f64,
        metric: m[0].mean_amplitude,
    })
}

/// See [`run_usecase_a_with`].
pub fn run_usecase_b_with(
    p: &UsecaseBParams,
    run_speed: impl Fn(usize, usize) -> Vec<Result<DropOutcomeB, EvalError>>,
) -> Result<Vec<Vec<DropOutcomeB>>, EvalError> {
    p.speeds_kmh
        .iter()
        .enumerate()
        .map(|(si, _)| run_speed(si, p.common.drops).into_iter().collect())
        .collect()
}

pub fn run_usecase_b(p: &UsecaseBParams) -> Result<Vec<Vec<DropOutcomeB>>, EvalError> {
    run_usecase_b_with(p, |si, drops| {
        (0..drops).map(|di| usecase_b_drop(p, si, di)).collect()
    })
}

/// One output row: (speed, scheme) with its mean SE and mean metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub speed_kmh: f64,
    pub scheme: String,
    pub delay_label: String,
    pub mean_se_bpshz: f64,
    pub mean_metric: f64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean switched SE and genie-agreement fraction for one delay and
/// threshold band on one speed's outcomes. Decisions are made per feedback
/// period (previous mode kept inside the hysteresis band, high-correlation
/// mode first); agreement is against each drop's genie mode. The
/// high-correlation mode is Type-II.
pub fn switched_stats_a(
    outcomes: &[DropOutcomeA],
    delay_idx: usize,
    threshold: f64,
    hysteresis: f64,
) -> Result<(f64, f64), EvalError> {
    let mut se = 0.0;
    let mut agree = 0usize;
    let mut decisions = 0usize;
    for o in outcomes {
        let genie_high = o.genie_is_high();
        let mut prev_high = true;
        let mut drop_se = 0.0;
        for period in &o.periods {
            let metric = period.metrics[delay_idx].ok_or(EvalError::BadConfig(
                "policy delay unrealizable under the TRS config",
            ))?;
            let pick_high = if metric > threshold + hysteresis {
                true
            } else if metric < threshold - hysteresis {
                false
            } else {
                prev_high
            };
            prev_high = pick_high;
            drop_se += if pick_high {
                period.se_type2
            } else {
                period.se_type1
            };
            if pick_high == genie_high {
                agree += 1;
            }
            decisions += 1;
        }
        se += drop_se / o.periods.len() as f64;
    }
    Ok((
        se / outcomes.len().max(1) as f64,
        agree as f64 / decisions.max(1) as f64,
    ))
}

/// As [`switched_stats_a`] for the DMRS study (high correlation → sparse
/// pilots).
pub fn switched_stats_b(
    outcomes: &[DropOutcomeB],
    threshold: f64,
) -> Result<(f64, f64), EvalError> {
    let mut se = 0.0;
    let mut agree = 0usize;
    for o in outcomes {
        let metric = o.metric.ok_or(EvalError::BadConfig(
            "metric delay unrealizable under the TRS config",
        ))?;
        let pick_sparse = metric > threshold;
        se += if pick_sparse { o.se_sparse } else { o.se_dense };
        let genie_sparse = o.se_sparse >= o.se_dense;
        if pick_sparse == genie_sparse {
            agree += 1;
        }
    }
    let n = outcomes.len().max(1) as f64;
    Ok((se / n, agree as f64 / n))
}

/// Calibration samples for one switching delay: per drop, the metric plus
/// the throughput each mode achieved (high mode = Type-II).
pub fn calibration_samples_a(
    speeds_kmh: &[f64],
    per_speed: &[Vec<DropOutcomeA>],
    delay_idx: usize,
) -> Result<Vec<CalibrationSample>, EvalError> {
    let mut out = Vec::new();
    for (si, outcomes) in per_speed.iter().enumerate() {
        for o in outcomes {
            for period in &o.periods {
                let metric = period.metrics[delay_idx].ok_or(EvalError::BadConfig(
                    "policy delay unrealizable under the TRS config",
                ))?;
                out.push(CalibrationSample {
                    speed_kmh: speeds_kmh[si],
                    metric,
                    throughput_high_mode: period.se_type2,
                    throughput_low_mode: period.se_type1,
                });
            }
        }
    }
    Ok(out)
}

/// As [`calibration_samples_a`] for the DMRS study (high mode = sparse
/// pilots).
pub fn calibration_samples_b(
    speeds_kmh: &[f64],
    per_speed: &[Vec<DropOutcomeB>],
) -> Result<Vec<CalibrationSample>, EvalError> {
    let mut out = Vec::new();
    for (si, outcomes) in per_speed.iter().enumerate() {
        for o in outcomes {
            let metric = o.metric.ok_or(EvalError::BadConfig(
                "metric delay unrealizable under the TRS config",
            ))?;
            out.push(CalibrationSample {
                speed_kmh: speeds_kmh[si],
                metric,
                throughput_high_mode: o.se_sparse,
                throughput_low_mode: o.se_dense,
            });
        }
    }
    Ok(out)
}

/// Result rows for the precoding study: fixed Type-I/Type-II, genie, and
/// one switched row per policy.
pub fn summarize_usecase_a(
    p: &UsecaseAParams,
    per_speed: &[Vec<DropOutcomeA>],
    policies: &[SwitchingPolicy],
) -> Result<Vec<ResultRow>, EvalError> {
    let mut rows = Vec::new();
    for (si, outcomes) in per_speed.iter().enumerate() {
        let speed = p.speeds_kmh[si];
        let metric_mean = |delay_idx: usize| -> f64 {
            mean(
                outcomes
                    .iter()
                    .flat_map(|o| o.periods.iter().filter_map(|p| p.metrics[delay_idx])),
            )
        };
        let base_metric = metric_mean(0);
        let first_label = p.delays[0].to_string();
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "TypeI".to_string(),
            delay_label: first_label.clone(),
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.mean_se_type1())),
            mean_metric: base_metric,
        });
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "TypeII".to_string(),
            delay_label: first_label.clone(),
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.mean_se_type2())),
            mean_metric: base_metric,
        });
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "genie".to_string(),
            delay_label: first_label,
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.genie_se())),
            mean_metric: base_metric,
        });
        for policy in policies {
            policy
                .validate()
                .map_err(|_| EvalError::BadConfig("invalid policy band"))?;
            let delay_idx = p
                .delays
                .iter()
                .position(|d| *d == policy.metric_delay)
                .ok_or(EvalError::BadConfig(
                    "policy delay not among measured delays",
                ))?;
            let (se, _) =
                switched_stats_a(outcomes, delay_idx, policy.threshold, policy.hysteresis)?;
            rows.push(ResultRow {
                speed_kmh: speed,
                scheme: alloc::format!("switched-{}", policy.metric_delay),
                delay_label: policy.metric_delay.to_string(),
                mean_se_bpshz: se,
                mean_metric: metric_mean(delay_idx),
            });
        }
    }
    Ok(rows)
}

/// Result rows for the DMRS study.
pub fn summarize_usecase_b(
    p: &UsecaseBParams,
    per_speed: &[Vec<DropOutcomeB>],
    policies: &[SwitchingPolicy],
) -> Result<Vec<ResultRow>, EvalError> {
    let label = TdcpDelay::FourSymbols.to_string();
    let mut rows = Vec::new();
    for (si, outcomes) in per_speed.iter().enumerate() {
        let speed = p.speeds_kmh[si];
        let metric = mean(outcomes.iter().filter_map(|o| o.metric));
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "dmrs-1+1".to_string(),
            delay_label: label.clone(),
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.se_sparse)),
            mean_metric: metric,
        });
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "dmrs-1+2".to_string(),
            delay_label: label.clone(),
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.se_dense)),
            mean_metric: metric,
        });
        rows.push(ResultRow {
            speed_kmh: speed,
            scheme: "genie".to_string(),
            delay_label: label.clone(),
            mean_se_bpshz: mean(outcomes.iter().map(|o| o.se_sparse.max(o.se_dense))),
            mean_metric: metric,
        });
        for policy in policies {
            policy
                .validate()
                .map_err(|_| EvalError::BadConfig("invalid policy band"))?;
            if policy.metric_delay != TdcpDelay::FourSymbols {
                return Err(EvalError::BadConfig(
                    "the DMRS study measures only the 4-symbol delay",
                ));
            }
            let (se, _) = switched_stats_b(outcomes, policy.threshold)?;
            rows.push(ResultRow {
                speed_kmh: speed,
                scheme: "switched-4os".to_string(),
                delay_label: label.clone(),
                mean_se_bpshz: se,
                mean_metric: metric,
            });
        }
    }
    Ok(rows)
}

/// Run + summarize in one call (sequential).
pub fn eval_usecase_a(
    p: &UsecaseAParams,
    policies: &[SwitchingPolicy],
) -> Result<Vec<ResultRow>, EvalError> {
    let per_speed = run_usecase_a(p)?;
    summarize_usecase_a(p, &per_speed, policies)
}

pub fn eval_usecase_b(
    p: &UsecaseBParams,
    policies: &[SwitchingPolicy],
) -> Result<Vec<ResultRow>, EvalError> {
    let per_speed = run_usecase_b(p)?;
    summarize_usecase_b(p, &per_speed, policies)
}
