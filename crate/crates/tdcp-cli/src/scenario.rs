//! Scenario configuration files.
//!
//! Plain-text nested key-value format: `[section]` headers, `key = value`
//! lines, `#` comments, comma-separated lists. Every key has a default
//! matching the reference evaluation setup (3.5 GHz carrier, 30 kHz
//! subcarrier spacing, CDL-A 100 ns / ASA 45° / ZSA 10°, 2×4 dual-polarized
//! base-station panel, comb-4 dual-slot TRS every 40 slots, 20-slot
//! feedback period), so a minimal file only needs to say what differs.
//! Unknown keys, duplicate keys and violated constraints are reported with
//! their line numbers.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use tdcp_core::channel::{AntennaArray, CdlTable, ElementPattern, TapProfile};
use tdcp_core::linkeval::usecase::{EvalParams, UsecaseAParams, UsecaseBParams};
use tdcp_core::policy::{SwitchingPolicy, ThresholdMap};
use tdcp_core::report::{
    parse_delay_label, validate_config, TdcpDelay, TdcpReportConfig, UeCapability,
};
use tdcp_core::trs::{Numerology, TrsConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    Tdl,
    Cdl,
}

/// Fully parsed, defaulted and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub drops: usize,
    pub carrier_hz: f64,
    pub numerology: Numerology,

    pub model: ChannelModel,
    pub cdl_table: Option<CdlTable>,
    pub tdl_taps: TapProfile,
    pub num_rays: usize,
    pub delay_spread_s: f64,
    pub asa_deg: f64,
    pub zsa_deg: f64,
    pub bs_array: AntennaArray,
    pub ue_array: AntennaArray,

    pub trs: TrsConfig,
    pub trs_snr_db: f64,
    pub pdsch_snr_db: f64,
    pub smoother_width: usize,

    pub report: TdcpReportConfig,
    pub capability: UeCapability,

    pub policy: Option<PolicySection>,

    pub speeds_kmh: Vec<f64>,
    pub directions_deg: Vec<f64>,
    pub feedback_period_slots: u32,
    pub pdsch_freq_points: usize,
    pub pdsch_bandwidth_hz: f64,
    pub measure_periods: u32,
    pub bias_correction: bool,
    pub type1_oversampling: usize,
    pub periods_per_drop: usize,
    pub slots_per_drop: usize,
    pub dmrs_low: Vec<u32>,
    pub dmrs_high: Vec<u32>,
    pub autocorr_delays_s: Vec<f64>,
    pub autocorr_origins: usize,
    pub autocorr_freq_points: usize,
}

#[derive(Debug, Clone)]
pub struct PolicySection {
    pub metric_delay: TdcpDelay,
    pub threshold: f64,
    pub hysteresis: f64,
    pub high_mode: String,
    pub low_mode: String,
    pub by_snr: Option<ThresholdMap>,
}

impl PolicySection {
    /// Materialize the policy, resolving a per-SNR map at the PDSCH SNR.
    pub fn to_policy(&self, pdsch_snr_db: f64) -> SwitchingPolicy {
        let threshold = match &self.by_snr {
            Some(map) => map.lookup(pdsch_snr_db),
            None => self.threshold,
        };
        SwitchingPolicy {
            metric_delay: self.metric_delay,
            threshold,
            hysteresis: self.hysteresis,
            high_corr_mode: self.high_mode.clone(),
            low_corr_mode: self.low_mode.clone(),
        }
    }
}

struct RawFile {
    /// section → key → (value, line number)
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

fn parse_raw(text: &str) -> Result<RawFile, CliError> {
    let mut sections: BTreeMap<String, BTreeMap<String, (String, usize)>> = BTreeMap::new();
    let mut current = String::new(); // global section
    sections.insert(String::new(), BTreeMap::new());
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| {
                    CliError::config(format!("line {line_no}: unterminated section header"))
                })?
                .trim()
                .to_string();
            sections.entry(name.clone()).or_default();
            current = name;
            continue;
        }
        let eq = line
            .find('=')
            .ok_or_else(|| CliError::config(format!("line {line_no}: expected 'key = value'")))?;
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(CliError::config(format!("line {line_no}: empty key")));
        }
        let section = sections.get_mut(&current).expect("current section exists");
        if let Some((_, prev_line)) = section.get(&key) {
            return Err(CliError::config(format!(
                "line {line_no}: duplicate key '{key}' (first set on line {prev_line})"
            )));
        }
        section.insert(key, (value, line_no));
    }
    Ok(RawFile { sections })
}

/// Tracks which keys were consumed so leftovers surface as unknown-key
/// errors with their line numbers.
struct Reader<'a> {
    raw: &'a RawFile,
    used: BTreeSet<(String, String)>,
}

impl<'a> Reader<'a> {
    fn new(raw: &'a RawFile) -> Self {
        Reader {
            raw,
            used: BTreeSet::new(),
        }
    }

    fn get(&mut self, section: &str, key: &str) -> Option<(&'a str, usize)> {
        let entry = self.raw.sections.get(section)?.get(key)?;
        self.used.insert((section.to_string(), key.to_string()));
        Some((entry.0.as_str(), entry.1))
    }

    fn parse<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((v, line)) => v.parse::<T>().map_err(|_| {
                CliError::config(format!("line {line}: cannot parse '{v}' for key '{key}'"))
            }),
        }
    }

    fn parse_list<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: Vec<T>,
    ) -> Result<Vec<T>, CliError> {
        match self.get(section, key) {
            None => Ok(default),
            Some((v, line)) => v
                .split(',')
                .map(|s| {
                    s.trim().parse::<T>().map_err(|_| {
                        CliError::config(format!(
                            "line {line}: cannot parse list element '{}' for key '{key}'",
                            s.trim()
                        ))
                    })
                })
                .collect(),
        }
    }

    fn string(&mut self, section: &str, key: &str, default: &str) -> String {
        match self.get(section, key) {
            None => default.to_string(),
            Some((v, _)) => v.to_string(),
        }
    }

    fn finish(self, known_sections: &[&str]) -> Result<(), CliError> {
        for (section, keys) in &self.raw.sections.iter().collect::<Vec<_>>() {
            if !known_sections.contains(&section.as_str()) {
                return Err(CliError::config(format!("unknown section '[{section}]'")));
            }
            for (key, (_, line)) in keys.iter() {
                if !self.used.contains(&((*section).clone(), key.clone())) {
                    return Err(CliError::config(format!(
                        "line {line}: unknown key '{key}' in section '[{section}]'"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_delay(s: &str, line: usize) -> Result<TdcpDelay, CliError> {
    parse_delay_label(s).ok_or_else(|| {
        CliError::config(format!(
            "line {line}: '{s}' is not a delay label (4os, 1slot..10slot)"
        ))
    })
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str_with_base(&text, &base)
    }

    pub fn from_str_with_base(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let raw = parse_raw(text)?;
        let mut r = Reader::new(&raw);

        let seed: u64 = r.parse("", "seed", 1)?;
        let drops: usize = r.parse("", "drops", 200)?;
        if drops == 0 {
            return Err(CliError::config("drops must be >= 1"));
        }
        let carrier_hz: f64 = r.parse("", "carrier_hz", 3.5e9)?;

        let scs: f64 = r.parse("numerology", "scs_hz", 30e3)?;
        let numerology =
            Numerology::from_scs(scs).map_err(|e| CliError::config(format!("numerology: {e}")))?;

        // Channel.
        let model = match r
            .string("channel", "model", "cdl")
            .to_ascii_lowercase()
            .as_str()
        {
            "cdl" => ChannelModel::Cdl,
            "tdl" => ChannelModel::Tdl,
            other => return Err(CliError::config(format!("unknown channel model '{other}'"))),
        };
        let cdl_table = if model == ChannelModel::Cdl {
            let rel = r.string("channel", "cdl_table", "cdl_a.txt");
            let mut table_path = PathBuf::from(&rel);
            if table_path.is_relative() {
                table_path = base_dir.join(table_path);
            }
            let text = std::fs::read_to_string(&table_path).map_err(|e| {
                CliError::config(format!(
                    "cannot read CDL table {}: {e}",
                    table_path.display()
                ))
            })?;
            Some(
                CdlTable::parse(&text)
                    .map_err(|e| CliError::config(format!("{}: {e}", table_path.display())))?,
            )
        } else {
            let _ = r.get("channel", "cdl_table");
            None
        };
        let tap_spec = r.string("channel", "taps", "0:1");
        let tdl_taps = parse_taps(&tap_spec)?;
        let num_rays: usize = r.parse("channel", "num_rays", 64)?;
        let delay_spread_s: f64 = r.parse("channel", "delay_spread_s", 100e-9)?;
        let asa_deg: f64 = r.parse("channel", "asa_deg", 45.0)?;
        let zsa_deg: f64 = r.parse("channel", "zsa_deg", 10.0)?;
        let bs_pattern = match r.string("channel", "bs_pattern", "isotropic").as_str() {
            "isotropic" => ElementPattern::Isotropic,
            "directional" => ElementPattern::Directional,
            other => {
                return Err(CliError::config(format!(
                    "unknown element pattern '{other}'"
                )))
            }
        };
        let bs_array = AntennaArray::new(
            r.parse("channel", "bs_rows", 2usize)?,
            r.parse("channel", "bs_cols", 4usize)?,
            r.parse("channel", "bs_pols", 2usize)?,
            r.parse("channel", "bs_horizontal_spacing", 0.5)?,
            r.parse("channel", "bs_vertical_spacing", 0.8)?,
            bs_pattern,
        )
        .map_err(|e| CliError::config(format!("bs array: {e}")))?;
        let ue_pols: usize = r.parse("channel", "ue_pols", 2usize)?;
        let ue_array = AntennaArray::new(1, 1, ue_pols, 0.5, 0.5, ElementPattern::Isotropic)
            .map_err(|e| CliError::config(format!("ue array: {e}")))?;

        // TRS.
        let positions: Vec<u32> = r.parse_list("trs", "symbol_positions", vec![4, 8])?;
        if positions.len() != 2 {
            return Err(CliError::config("symbol_positions needs exactly 2 entries"));
        }
        let second: i64 = r.parse("trs", "second_offset_slots", -1i64)?;
        let trs = TrsConfig {
            comb_spacing: r.parse("trs", "comb", 4u32)?,
            comb_offset: r.parse("trs", "comb_offset", 0u32)?,
            symbol_positions: [positions[0], positions[1]],
            slots_per_burst: r.parse("trs", "slots_per_burst", 2u32)?,
            burst_periodicity_slots: r.parse("trs", "period_slots", 40u32)?,
            second_trs_offset_slots: if second < 0 {
                None
            } else {
                Some(second as u32)
            },
            second_trs_period_multiple: r.parse("trs", "second_period_multiple", 1u32)?,
            bandwidth_prbs: r.parse("trs", "bandwidth_prbs", 27u32)?,
        };
        trs.validate()
            .map_err(|e| CliError::config(format!("trs: {e}")))?;
        let trs_snr_db: f64 = r.parse("trs", "trs_snr_db", 10.0)?;
        let pdsch_snr_db: f64 = r.parse("trs", "pdsch_snr_db", 10.0)?;
        let smoother_width: usize = r.parse("trs", "smoother_width", 1usize)?;

        // Report + capability.
        let delay_labels: Vec<String> = r.parse_list(
            "report",
            "delays",
            vec!["4os".to_string(), "1slot".to_string()],
        )?;
        let delay_line = r
            .raw
            .sections
            .get("report")
            .and_then(|s| s.get("delays"))
            .map(|(_, l)| *l)
            .unwrap_or(0);
        let delays = delay_labels
            .iter()
            .map(|s| parse_delay(s, delay_line))
            .collect::<Result<Vec<_>, _>>()?;
        let mut report = TdcpReportConfig::new(delays);
        report.report_phase = r.parse("report", "report_phase", false)?;
        report.amp_bits = r.parse("report", "amp_bits", 7u8)?;
        report.phase_bits = r.parse("report", "phase_bits", 6u8)?;

        let cap_delay_label = r.string("capability", "max_delay", "10slot");
        let capability = UeCapability {
            max_delay: parse_delay(&cap_delay_label, 0)?,
            max_num_delays: r.parse("capability", "max_num_delays", 4u8)?,
            phase_supported: r.parse("capability", "phase_supported", true)?,
        };

        // Policy (optional).
        let policy = if raw.sections.get("policy").is_some_and(|s| !s.is_empty()) {
            let delay_label = r.string("policy", "metric_delay", "3slot");
            let by_snr_spec = r.string("policy", "thresholds_by_snr", "");
            let by_snr = if by_snr_spec.is_empty() {
                None
            } else {
                Some(parse_threshold_map(&by_snr_spec)?)
            };
            Some(PolicySection {
                metric_delay: parse_delay(&delay_label, 0)?,
                threshold: r.parse("policy", "threshold", 0.9)?,
                hysteresis: r.parse("policy", "hysteresis", 0.0)?,
                high_mode: r.string("policy", "high_mode", "TypeII"),
                low_mode: r.string("policy", "low_mode", "TypeI"),
                by_snr,
            })
        } else {
            None
        };

        // Sweep.
        let speeds_kmh: Vec<f64> =
            r.parse_list("sweep", "speeds_kmh", vec![3.0, 10.0, 20.0, 30.0, 60.0])?;
        let directions_deg: Vec<f64> = r.parse_list(
            "sweep",
            "directions_deg",
            vec![0.0, 45.0, 90.0, 135.0, 180.0, 225.0, 270.0, 315.0],
        )?;
        if speeds_kmh.is_empty() || directions_deg.is_empty() {
            return Err(CliError::config(
                "speeds_kmh and directions_deg must be non-empty",
            ));
        }
        let feedback_period_slots: u32 = r.parse("sweep", "feedback_period_slots", 20u32)?;
        let pdsch_freq_points: usize = r.parse("sweep", "pdsch_freq_points", 8usize)?;
        let pdsch_bandwidth_hz: f64 = r.parse("sweep", "pdsch_bandwidth_hz", 10e6)?;
        let measure_periods: u32 = r.parse("sweep", "measure_periods", 1u32)?;
        let bias_correction: bool = r.parse("sweep", "bias_correction", false)?;
        let type1_oversampling: usize = r.parse("sweep", "type1_oversampling", 4usize)?;
        let periods_per_drop: usize = r.parse("sweep", "periods_per_drop", 6usize)?;
        let slots_per_drop: usize = r.parse("sweep", "slots_per_drop", 8usize)?;
        let dmrs_low: Vec<u32> = r.parse_list("sweep", "dmrs_low", vec![2, 11])?;
        let dmrs_high: Vec<u32> = r.parse_list("sweep", "dmrs_high", vec![2, 7, 11])?;
        let default_grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25e-3).collect();
        let autocorr_delays_s: Vec<f64> =
            r.parse_list("sweep", "autocorr_delays_s", default_grid)?;
        let autocorr_origins: usize = r.parse("sweep", "autocorr_origins", 4usize)?;
        let autocorr_freq_points: usize = r.parse("sweep", "autocorr_freq_points", 48usize)?;

        r.finish(&[
            "",
            "numerology",
            "channel",
            "trs",
            "report",
            "capability",
            "policy",
            "sweep",
        ])?;

        let scenario = Scenario {
            seed,
            drops,
            carrier_hz,
            numerology,
            model,
            cdl_table,
            tdl_taps,
            num_rays,
            delay_spread_s,
            asa_deg,
            zsa_deg,
            bs_array,
            ue_array,
            trs,
            trs_snr_db,
            pdsch_snr_db,
            smoother_width,
            report,
            capability,
            policy,
            speeds_kmh,
            directions_deg,
            feedback_period_slots,
            pdsch_freq_points,
            pdsch_bandwidth_hz,
            measure_periods,
            bias_correction,
            type1_oversampling,
            periods_per_drop,
            slots_per_drop,
            dmrs_low,
            dmrs_high,
            autocorr_delays_s,
            autocorr_origins,
            autocorr_freq_points,
        };
        Ok(scenario)
    }

    /// Report-path validation: the configured delays against the UE
    /// capability and the TRS resources exactly as configured.
    pub fn validate_report_config(&self) -> Result<(), CliError> {
        let violations =
            validate_config(&self.report, &self.capability, &self.trs, &self.numerology);
        if violations.is_empty() {
            Ok(())
        } else {
            let lines: Vec<String> = violations.iter().map(|v| format!("  - {v}")).collect();
            Err(CliError::config(format!(
                "report configuration violates reporting rules:\n{}",
                lines.join("\n")
            )))
        }
    }

    /// Evenly spaced baseband frequency grid across a bandwidth.
    pub fn freq_grid(&self, points: usize, bandwidth_hz: f64) -> Vec<f64> {
        (0..points)
            .map(|i| (i as f64 - (points as f64 - 1.0) / 2.0) * bandwidth_hz / points as f64)
            .collect()
    }

    fn eval_common(&self) -> Result<EvalParams, CliError> {
        let table = self
            .cdl_table
            .clone()
            .ok_or_else(|| CliError::config("use-case evaluation requires channel model = cdl"))?;
        Ok(EvalParams {
            numerology: self.numerology,
            carrier_hz: self.carrier_hz,
            table,
            delay_spread_s: self.delay_spread_s,
            asa_deg: self.asa_deg,
            zsa_deg: self.zsa_deg,
            tx_array: self.bs_array.clone(),
            rx_array: self.ue_array.clone(),
            directions_deg: self.directions_deg.clone(),
            drops: self.drops,
            trs: self.trs.clone(),
            trs_snr_db: self.trs_snr_db,
            pdsch_snr_db: self.pdsch_snr_db,
            feedback_period_slots: self.feedback_period_slots,
            pdsch_freqs: self.freq_grid(self.pdsch_freq_points, self.pdsch_bandwidth_hz),
            measure_periods: self.measure_periods,
            bias_correction: self.bias_correction,
            smoother_width: self.smoother_width,
            type1_oversampling: self.type1_oversampling,
            seed: self.seed,
        })
    }

    pub fn usecase_a_params(&self) -> Result<UsecaseAParams, CliError> {
        Ok(UsecaseAParams {
            common: self.eval_common()?,
            speeds_kmh: self.speeds_kmh.clone(),
            delays: self.report.delays.clone(),
            periods_per_drop: self.periods_per_drop,
        })
    }

    pub fn usecase_b_params(&self) -> Result<UsecaseBParams, CliError> {
        Ok(UsecaseBParams {
            common: self.eval_common()?,
            speeds_kmh: self.speeds_kmh.clone(),
            dmrs_low: self.dmrs_low.clone(),
            dmrs_high: self.dmrs_high.clone(),
            slots_per_drop: self.slots_per_drop,
        })
    }

    /// The switching policies to evaluate (none when no [policy] section).
    pub fn policies(&self) -> Vec<SwitchingPolicy> {
        match &self.policy {
            None => vec![],
            Some(p) => vec![p.to_policy(self.pdsch_snr_db)],
        }
    }
}

fn parse_taps(spec: &str) -> Result<TapProfile, CliError> {
    let mut taps = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (d, p) = part
            .split_once(':')
            .ok_or_else(|| CliError::config(format!("tap '{part}' must be delay_s:power")))?;
        let delay: f64 = d
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad tap delay '{d}'")))?;
        let power: f64 = p
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad tap power '{p}'")))?;
        taps.push((delay, power));
    }
    TapProfile::new(&taps).map_err(|e| CliError::config(format!("taps: {e}")))
}

fn parse_threshold_map(spec: &str) -> Result<ThresholdMap, CliError> {
    let mut entries = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (s, t) = part.split_once(':').ok_or_else(|| {
            CliError::config(format!("threshold entry '{part}' must be snr_db:threshold"))
        })?;
        let snr: f64 = s
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad SNR '{s}'")))?;
        let thr: f64 = t
            .trim()
            .parse()
            .map_err(|_| CliError::config(format!("bad threshold '{t}'")))?;
        entries.push((snr, thr));
    }
    ThresholdMap::new(entries).map_err(|e| CliError::config(format!("thresholds_by_snr: {e}")))
}
