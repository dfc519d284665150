//! Seeded experiment orchestration. Drops are parallelized with rayon;
//! every drop derives its own seed from (scenario seed, speed index, drop
//! index) and partial results are reduced in drop-index order, so the output
//! does not depend on the parallelism degree.

use num_complex::Complex64;
use rayon::prelude::*;

use tdcp_core::channel::{CdlParams, ChannelSampler, VelocityVector};
use tdcp_core::linkeval::measure::port_observation;
use tdcp_core::linkeval::usecase::{
    calibration_samples_a, calibration_samples_b, run_usecase_a_with, run_usecase_b_with,
    summarize_usecase_a, summarize_usecase_b, DropOutcomeA, DropOutcomeB, ResultRow,
};
use tdcp_core::policy::calibrate_threshold;
use tdcp_core::report::TdcpDelay;
use tdcp_core::rng::derive_seed;

use crate::error::CliError;
use crate::scenario::{ChannelModel, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UseCase {
    A,
    B,
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::runtime(format!("cannot build thread pool: {e}")))
}

#[derive(Debug, Clone)]
pub struct AutocorrRow {
    pub model: String,
    pub direction_deg: f64,
    pub speed_kmh: f64,
    pub delay_s: f64,
    pub mean_amplitude: f64,
    pub stddev: f64,
}

/// Per-drop pooled sums per delay: (Σ b·a*, Σ|a|², Σ|b|²) and the drop's own
/// amplitude. Summing these across drops in index order reproduces the
/// pooled ensemble estimate deterministically.
struct DropPartial {
    per_delay: Vec<(Complex64, f64, f64)>,
}

fn autocorr_drop(
    s: &Scenario,
    direction_deg: f64,
    speed_kmh: f64,
    pair_idx: usize,
    drop_idx: usize,
) -> Result<DropPartial, CliError> {
    let seed = derive_seed(s.seed, 0xac00, ((pair_idx as u64) << 32) | drop_idx as u64);
    let sampler = build_sampler(s, direction_deg, speed_kmh, seed)?;
    let freqs = s.freq_grid(s.autocorr_freq_points, s.pdsch_bandwidth_hz);
    let max_delay = s.autocorr_delays_s.iter().cloned().fold(0.0f64, f64::max);
    let origin_spacing = 4.0 * max_delay + 10e-3;

    let mut per_delay = vec![(Complex64::new(0.0, 0.0), 0.0, 0.0); s.autocorr_delays_s.len()];
    for o in 0..s.autocorr_origins {
        let t0 = o as f64 * origin_spacing;
        let a = port_observation(&sampler, t0, &freqs);
        for (di, &delay) in s.autocorr_delays_s.iter().enumerate() {
            let b = port_observation(&sampler, t0 + delay, &freqs);
            let acc = &mut per_delay[di];
            for (x, y) in a.iter().zip(b.iter()) {
                acc.0 += y * x.conj();
                acc.1 += x.norm_sqr();
                acc.2 += y.norm_sqr();
            }
        }
    }
    Ok(DropPartial { per_delay })
}

fn build_sampler(
    s: &Scenario,
    direction_deg: f64,
    speed_kmh: f64,
    seed: u64,
) -> Result<ChannelSampler, CliError> {
    let velocity = VelocityVector::from_kmh(speed_kmh, direction_deg)
        .map_err(|e| CliError::config(format!("velocity: {e}")))?;
    match s.model {
        ChannelModel::Tdl => {
            let fd = velocity.max_doppler_hz(s.carrier_hz);
            ChannelSampler::tdl(&s.tdl_taps, fd, s.num_rays, seed)
                .map_err(|e| CliError::config(format!("tdl channel: {e}")))
        }
        ChannelModel::Cdl => {
            let table = s
                .cdl_table
                .as_ref()
                .expect("cdl scenarios always carry a table");
            let params = CdlParams {
                table,
                delay_spread_s: s.delay_spread_s,
                asa_deg: s.asa_deg,
                zsa_deg: s.zsa_deg,
                tx: s.bs_array.clone(),
                rx: s.ue_array.clone(),
                velocity,
                carrier_hz: s.carrier_hz,
            };
            ChannelSampler::cdl(&params, seed)
                .map_err(|e| CliError::config(format!("cdl channel: {e}")))
        }
    }
}

/// Ideal (noiseless) correlation-vs-delay curves per (direction, speed),
/// pooled over drops and time origins.
pub fn run_autocorr(s: &Scenario, jobs: usize) -> Result<Vec<AutocorrRow>, CliError> {
    let model = match s.model {
        ChannelModel::Tdl => "tdl",
        ChannelModel::Cdl => "cdl",
    };
    let mut pairs = Vec::new();
    for &dir in &s.directions_deg {
        for &speed in &s.speeds_kmh {
            pairs.push((dir, speed));
        }
    }

    let pool = pool(jobs)?;
    let mut rows = Vec::new();
    for (pair_idx, &(dir, speed)) in pairs.iter().enumerate() {
        let partials: Vec<Result<DropPartial, CliError>> = pool.install(|| {
            (0..s.drops)
                .into_par_iter()
                .map(|drop_idx| autocorr_drop(s, dir, speed, pair_idx, drop_idx))
                .collect()
        });
        let partials: Result<Vec<_>, _> = partials.into_iter().collect();
        let partials = partials?;

        for (di, &delay) in s.autocorr_delays_s.iter().enumerate() {
            let mut z = Complex64::new(0.0, 0.0);
            let mut pa: f64 = 0.0;
            let mut pb: f64 = 0.0;
            let mut drop_amps = Vec::with_capacity(partials.len());
            for p in &partials {
                let (dz, dpa, dpb) = p.per_delay[di];
                z += dz;
                pa += dpa;
                pb += dpb;
                drop_amps.push(dz.norm() / (dpa * dpb).sqrt());
            }
            let mean_amplitude = z.norm() / (pa * pb).sqrt();
            let n = drop_amps.len() as f64;
            let m = drop_amps.iter().sum::<f64>() / n;
            let var = drop_amps.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n;
            rows.push(AutocorrRow {
                model: model.to_string(),
                direction_deg: dir,
                speed_kmh: speed,
                delay_s: delay,
                mean_amplitude,
                stddev: var.sqrt(),
            });
        }
    }
    Ok(rows)
}

/// Run a use-case sweep with the scenario's policies (if any).
pub fn run_usecase(s: &Scenario, which: UseCase, jobs: usize) -> Result<Vec<ResultRow>, CliError> {
    let policies = s.policies();
    let pool = pool(jobs)?;
    match which {
        UseCase::A => {
            let p = s.usecase_a_params()?;
            let per_speed = parallel_a(&pool, &p)?;
            summarize_usecase_a(&p, &per_speed, &policies)
                .map_err(|e| CliError::config(format!("{e}")))
        }
        UseCase::B => {
            let p = s.usecase_b_params()?;
            let per_speed = parallel_b(&pool, &p)?;
            summarize_usecase_b(&p, &per_speed, &policies)
                .map_err(|e| CliError::config(format!("{e}")))
        }
    }
}

fn parallel_a(
    pool: &rayon::ThreadPool,
    p: &tdcp_core::linkeval::usecase::UsecaseAParams,
) -> Result<Vec<Vec<DropOutcomeA>>, CliError> {
    run_usecase_a_with(p, |speed_idx, drops| {
        let results: Vec<_> = pool.install(|| {
            (0..drops)
                .into_par_iter()
                .map(|di| tdcp_core::linkeval::usecase::usecase_a_drop(p, speed_idx, di))
                .collect()
        });
        results
    })
    .map_err(|e| CliError::runtime(format!("{e}")))
}

fn parallel_b(
    pool: &rayon::ThreadPool,
    p: &tdcp_core::linkeval::usecase::UsecaseBParams,
) -> Result<Vec<Vec<DropOutcomeB>>, CliError> {
    run_usecase_b_with(p, |speed_idx, drops| {
        let results: Vec<_> = pool.install(|| {
            (0..drops)
                .into_par_iter()
                .map(|di| tdcp_core::linkeval::usecase::usecase_b_drop(p, speed_idx, di))
                .collect()
        });
        results
    })
    .map_err(|e| CliError::runtime(format!("{e}")))
}

/// Calibrate the switching threshold for a use-case; returns (delay,
/// threshold) and the policy file fragment.
pub fn run_calibrate(
    s: &Scenario,
    which: UseCase,
    jobs: usize,
) -> Result<(TdcpDelay, f64, String), CliError> {
    let pool = pool(jobs)?;
    let (delay, threshold, high, low) = match which {
        UseCase::A => {
            let p = s.usecase_a_params()?;
            let delay = match &s.policy {
                Some(pol) => pol.metric_delay,
                None => TdcpDelay::Slots(3),
            };
            let delay_idx = p.delays.iter().position(|d| *d == delay).ok_or_else(|| {
                CliError::config(format!(
                    "calibration delay {delay} is not in [report] delays"
                ))
            })?;
            let per_speed = parallel_a(&pool, &p)?;
            let samples = calibration_samples_a(&p.speeds_kmh, &per_speed, delay_idx)
                .map_err(|e| CliError::config(format!("{e}")))?;
            let thr =
                calibrate_threshold(&samples).map_err(|e| CliError::runtime(format!("{e}")))?;
            (delay, thr, "TypeII", "TypeI")
        }
        UseCase::B => {
            let p = s.usecase_b_params()?;
            let per_speed = parallel_b(&pool, &p)?;
            let samples = calibration_samples_b(&p.speeds_kmh, &per_speed)
                .map_err(|e| CliError::config(format!("{e}")))?;
            let thr =
                calibrate_threshold(&samples).map_err(|e| CliError::runtime(format!("{e}")))?;
            (TdcpDelay::FourSymbols, thr, "dmrs-1+1", "dmrs-1+2")
        }
    };
    let fragment = format!(
        "[policy]\nmetric_delay = {delay}\nthreshold = {threshold:.4}\nhysteresis = 0\nhigh_mode = {high}\nlow_mode = {low}\n"
    );
    Ok((delay, threshold, fragment))
}
