//! Reporting rules, quantization and wire encoding for the correlation
//! report.
//!
//! A report carries the quantized correlation amplitude (and optionally the
//! phase) for 1..4 configured delays drawn from the allowed set {4 OFDM
//! symbols, 1, 2, 3, 4, 5, 6, 10 slots}. What a UE can be asked for depends
//! on its capability (maximum delay, number of delays, phase support), and a
//! configured delay is only valid when the referenced TRS pattern actually
//! produces snapshot pairs at that delay — delays above 1 slot need the
//! second TRS at a matching offset.
//!
//! Quantizer bit-widths are placeholders (7-bit amplitude, 6-bit phase by
//! default) and configurable, so a standards-accurate table can be dropped
//! in without touching the wire layout.
//!
//! Wire layout (little-endian, versioned):
//!
//! ```text
//! offset size
//! 0      1    version (0x01)
//! 1      1    flags: bit0 = phase present
//! 2      1    number of delays (1..=4)
//! 3      1    amplitude quantizer bits (1..=12)
//! 4      1    phase quantizer bits (1..=12, 0 when no phase)
//! 5      8    measurement time, f64 bits
//! 13     per delay: tag (0 = 4 symbols, n = n slots), amplitude index u16,
//!             then phase index u16 when flagged
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::math::wrap_pi;
use crate::trs::{default_pair_tolerance, occasion_pairs, trs_occasions, Numerology, TrsConfig};

pub const REPORT_VERSION: u8 = 0x01;
pub const MAX_DELAYS: usize = 4;
pub const MAX_QUANT_BITS: u8 = 12;

/// Correlation delay from the allowed reporting set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TdcpDelay {
    /// 4 OFDM symbols (4/14 of a slot).
    FourSymbols,
    Slots(u8),
}

impl TdcpDelay {
    pub const ALLOWED_SLOTS: [u8; 7] = [1, 2, 3, 4, 5, 6, 10];

    pub fn is_allowed(&self) -> bool {
        match *self {
            TdcpDelay::FourSymbols => true,
            TdcpDelay::Slots(n) => Self::ALLOWED_SLOTS.contains(&n),
        }
    }

    /// Duration in OFDM symbols; orders delays.
    pub fn symbols(&self) -> u32 {
        match *self {
            TdcpDelay::FourSymbols => 4,
            TdcpDelay::Slots(n) => 14 * n as u32,
        }
    }

    pub fn seconds(&self, num: &Numerology) -> f64 {
        match *self {
            TdcpDelay::FourSymbols => 4.0 * num.symbol_duration_s,
            TdcpDelay::Slots(n) => n as f64 * num.slot_duration_s,
        }
    }

    fn wire_tag(&self) -> u8 {
        match *self {
            TdcpDelay::FourSymbols => 0,
            TdcpDelay::Slots(n) => n,
        }
    }

    fn from_wire_tag(tag: u8) -> Self {
        if tag == 0 {
            TdcpDelay::FourSymbols
        } else {
            TdcpDelay::Slots(tag)
        }
    }
}

impl PartialOrd for TdcpDelay {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TdcpDelay {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.symbols().cmp(&other.symbols())
    }
}

impl fmt::Display for TdcpDelay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            TdcpDelay::FourSymbols => write!(f, "4os"),
            TdcpDelay::Slots(n) => write!(f, "{n}slot"),
        }
    }
}

/// What the UE supports.
#[derive(Debug, Clone, PartialEq)]
pub struct UeCapability {
    pub max_delay: TdcpDelay,
    pub max_num_delays: u8,
    pub phase_supported: bool,
}

impl Default for UeCapability {
    fn default() -> Self {
        UeCapability {
            max_delay: TdcpDelay::Slots(10),
            max_num_delays: 4,
            phase_supported: true,
        }
    }
}

/// Reporting configuration: which delays, whether phase is reported, and
/// the quantizer widths.
#[derive(Debug, Clone, PartialEq)]
pub struct TdcpReportConfig {
    pub delays: Vec<TdcpDelay>,
    pub report_phase: bool,
    pub amp_bits: u8,
    pub phase_bits: u8,
}

impl TdcpReportConfig {
    pub fn new(delays: Vec<TdcpDelay>) -> Self {
        TdcpReportConfig {
            delays,
            report_phase: false,
            amp_bits: 7,
            phase_bits: 6,
        }
    }
}

/// One rule violation; violations are data, not faults.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooManyDelays { configured: usize, limit: usize },
    ExceedsCapabilityCount { configured: usize, supported: u8 },
    DelayNotAllowed(TdcpDelay),
    DuplicateDelay(TdcpDelay),
    DelaysNotSorted,
    ExceedsCapabilityDelay(TdcpDelay),
    PhaseNotSupported,
    DelayUnrealizable(TdcpDelay),
    BadQuantizerBits(u8),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooManyDelays { configured, limit } => {
                write!(
                    f,
                    "{configured} delays configured, at most {limit} reportable"
                )
            }
            Violation::ExceedsCapabilityCount {
                configured,
                supported,
            } => write!(f, "{configured} delays configured, UE supports {supported}"),
            Violation::DelayNotAllowed(d) => write!(f, "delay {d} not in the allowed set"),
            Violation::DuplicateDelay(d) => write!(f, "delay {d} configured twice"),
            Violation::DelaysNotSorted => write!(f, "delays must be sorted ascending"),
            Violation::ExceedsCapabilityDelay(d) => {
                write!(f, "delay {d} exceeds the UE capability")
            }
            Violation::PhaseNotSupported => write!(f, "phase reporting not supported by the UE"),
            Violation::DelayUnrealizable(d) => write!(
                f,
                "delay {d} has no snapshot pair under the referenced TRS configuration"
            ),
            Violation::BadQuantizerBits(b) => write!(f, "quantizer bits {b} out of range"),
        }
    }
}

/// Check a reporting configuration against the rules, the UE capability and
/// the referenced TRS pattern. Returns every violated rule; empty means ok.
pub fn validate_config(
    cfg: &TdcpReportConfig,
    cap: &UeCapability,
    trs: &TrsConfig,
    num: &Numerology,
) -> Vec<Violation> {
    let mut v = Vec::new();
    if cfg.delays.len() > MAX_DELAYS {
        v.push(Violation::TooManyDelays {
            configured: cfg.delays.len(),
            limit: MAX_DELAYS,
        });
    }
    if cfg.delays.len() > cap.max_num_delays as usize {
        v.push(Violation::ExceedsCapabilityCount {
            configured: cfg.delays.len(),
            supported: cap.max_num_delays,
        });
    }
    if cfg.report_phase && !cap.phase_supported {
        v.push(Violation::PhaseNotSupported);
    }
    for (b, used) in [(cfg.amp_bits, true), (cfg.phase_bits, cfg.report_phase)] {
        if used && (b == 0 || b > MAX_QUANT_BITS) {
            v.push(Violation::BadQuantizerBits(b));
        }
    }
    if cfg.delays.windows(2).any(|w| w[1] <= w[0]) {
        v.push(Violation::DelaysNotSorted);
    }
    let mut seen: Vec<TdcpDelay> = Vec::new();
    for &d in &cfg.delays {
        if seen.contains(&d) {
            v.push(Violation::DuplicateDelay(d));
        }
        seen.push(d);
        if !d.is_allowed() {
            v.push(Violation::DelayNotAllowed(d));
            continue;
        }
        if d > cap.max_delay {
            v.push(Violation::ExceedsCapabilityDelay(d));
        }
        if !delay_realizable(d, trs, num) {
            v.push(Violation::DelayUnrealizable(d));
        }
    }
    v
}

/// True when the TRS pattern produces at least one snapshot pair at the
/// delay: generate occasions over one full cycle of both TRSs and pair.
pub fn delay_realizable(delay: TdcpDelay, trs: &TrsConfig, num: &Numerology) -> bool {
    if trs.validate().is_err() {
        return false;
    }
    let cycle_slots = trs.burst_periodicity_slots as u64 * trs.second_trs_period_multiple as u64
        + trs.burst_periodicity_slots as u64;
    let window = (0.0, cycle_slots as f64 * num.slot_duration_s);
    let occasions = trs_occasions(trs, num, window);
    !occasion_pairs(&occasions, delay.seconds(num), default_pair_tolerance(num)).is_empty()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportError {
    LengthMismatch,
    PhaseMismatch,
    /// Amplitude outside [0, 1] or phase not finite.
    ValueOutOfRange,
    IndexOutOfRange,
    BadQuantizerBits,
    ConfigMismatch(&'static str),
    Framing(&'static str),
}

impl fmt::Display for ReportError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReportError::LengthMismatch => {
                write!(f, "value count does not match configured delays")
            }
            ReportError::PhaseMismatch => write!(f, "phase presence does not match configuration"),
            ReportError::ValueOutOfRange => write!(f, "value out of range"),
            ReportError::IndexOutOfRange => write!(f, "quantizer index out of range"),
            ReportError::BadQuantizerBits => write!(f, "quantizer bits out of range"),
            ReportError::ConfigMismatch(what) => write!(f, "report does not match config: {what}"),
            ReportError::Framing(what) => write!(f, "framing error: {what}"),
        }
    }
}

fn check_bits(bits: u8) -> Result<(), ReportError> {
    if bits == 0 || bits > MAX_QUANT_BITS {
        Err(ReportError::BadQuantizerBits)
    } else {
        Ok(())
    }
}

/// Uniform mid-rise quantizer on [0, 1] with 2^bits levels.
pub fn quantize_amplitude(c: f64, bits: u8) -> Result<u16, ReportError> {
    check_bits(bits)?;
    if !(0.0..=1.0).contains(&c) {
        return Err(ReportError::ValueOutOfRange);
    }
    let levels = 1u32 << bits;
    let idx = (c * levels as f64) as u32;
    Ok(idx.min(levels - 1) as u16)
}

/// Level midpoint for an amplitude index.
pub fn dequantize_amplitude(index: u16, bits: u8) -> Result<f64, ReportError> {
    check_bits(bits)?;
    let levels = 1u32 << bits;
    if index as u32 >= levels {
        return Err(ReportError::IndexOutOfRange);
    }
    Ok((index as f64 + 0.5) / levels as f64)
}

/// Uniform wrap-around quantizer on (-π, π] with 2^bits levels.
pub fn quantize_phase(phi: f64, bits: u8) -> Result<u16, ReportError> {
    check_bits(bits)?;
    if !phi.is_finite() {
        return Err(ReportError::ValueOutOfRange);
    }
    let levels = 1u32 << bits;
    let w = wrap_pi(phi);
    let idx = ((w + PI) / (2.0 * PI) * levels as f64) as u32;
    // φ = π lands on the wrap point; fold it onto index 0.
    Ok((idx % levels) as u16)
}

pub fn dequantize_phase(index: u16, bits: u8) -> Result<f64, ReportError> {
    check_bits(bits)?;
    let levels = 1u32 << bits;
    if index as u32 >= levels {
        return Err(ReportError::IndexOutOfRange);
    }
    Ok(wrap_pi(
        -PI + (index as f64 + 0.5) * 2.0 * PI / levels as f64,
    ))
}

/// Encoded report: quantized per-delay values plus the quantizer metadata
/// needed to interpret them.
#[derive(Debug, Clone, PartialEq)]
pub struct TdcpReport {
    pub delays: Vec<TdcpDelay>,
    pub amplitude_indices: Vec<u16>,
    pub phase_indices: Option<Vec<u16>>,
    pub amp_bits: u8,
    pub phase_bits: u8,
    pub measurement_time_s: f64,
}

/// Quantize measured values into a report.
pub fn build_report(
    cfg: &TdcpReportConfig,
    amplitudes: &[f64],
    phases: Option<&[f64]>,
    measurement_time_s: f64,
) -> Result<TdcpReport, ReportError> {
    if amplitudes.len() != cfg.delays.len() {
        return Err(ReportError::LengthMismatch);
    }
    if cfg.report_phase != phases.is_some() {
        return Err(ReportError::PhaseMismatch);
    }
    let amplitude_indices = amplitudes
        .iter()
        .map(|&c| quantize_amplitude(c, cfg.amp_bits))
        .collect::<Result<Vec<_>, _>>()?;
    let phase_indices = match phases {
        None => None,
        Some(ph) => {
            if ph.len() != cfg.delays.len() {
                return Err(ReportError::LengthMismatch);
            }
            Some(
                ph.iter()
                    .map(|&p| quantize_phase(p, cfg.phase_bits))
                    .collect::<Result<Vec<_>, _>>()?,
            )
        }
    };
    let with_phase = phase_indices.is_some();
    Ok(TdcpReport {
        delays: cfg.delays.clone(),
        amplitude_indices,
        phase_indices,
        amp_bits: cfg.amp_bits,
        // Phase quantizer bits are only meaningful when phase is carried.
        phase_bits: if with_phase { cfg.phase_bits } else { 0 },
        measurement_time_s,
    })
}

/// Decoded per-delay values.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedValue {
    pub delay: TdcpDelay,
    pub amplitude: f64,
    pub phase: Option<f64>,
}

/// Check a report against its configuration and dequantize.
pub fn parse_report(
    report: &TdcpReport,
    cfg: &TdcpReportConfig,
) -> Result<Vec<DecodedValue>, ReportError> {
    if report.delays != cfg.delays {
        return Err(ReportError::ConfigMismatch("delay list"));
    }
    if report.phase_indices.is_some() != cfg.report_phase {
        return Err(ReportError::PhaseMismatch);
    }
    if report.amp_bits != cfg.amp_bits || (cfg.report_phase && report.phase_bits != cfg.phase_bits)
    {
        return Err(ReportError::ConfigMismatch("quantizer bits"));
    }
    if report.amplitude_indices.len() != report.delays.len() {
        return Err(ReportError::LengthMismatch);
    }
    let mut out = Vec::with_capacity(report.delays.len());
    for (i, &delay) in report.delays.iter().enumerate() {
        let amplitude = dequantize_amplitude(report.amplitude_indices[i], report.amp_bits)?;
        let phase = match &report.phase_indices {
            None => None,
            Some(idx) => {
                if idx.len() != report.delays.len() {
                    return Err(ReportError::LengthMismatch);
                }
                Some(dequantize_phase(idx[i], report.phase_bits)?)
            }
        };
        out.push(DecodedValue {
            delay,
            amplitude,
            phase,
        });
    }
    Ok(out)
}

/// Serialize to the versioned byte layout (see module docs).
pub fn encode_bytes(report: &TdcpReport) -> Result<Vec<u8>, ReportError> {
    check_bits(report.amp_bits)?;
    let with_phase = report.phase_indices.is_some();
    if with_phase {
        check_bits(report.phase_bits)?;
    }
    let n = report.delays.len();
    if n == 0 || n > MAX_DELAYS || report.amplitude_indices.len() != n {
        return Err(ReportError::LengthMismatch);
    }
    let mut out = Vec::with_capacity(13 + n * 5);
    out.push(REPORT_VERSION);
    out.push(if with_phase { 1 } else { 0 });
    out.push(n as u8);
    out.push(report.amp_bits);
    out.push(if with_phase { report.phase_bits } else { 0 });
    out.extend_from_slice(&report.measurement_time_s.to_bits().to_le_bytes());
    for i in 0..n {
        out.push(report.delays[i].wire_tag());
        out.extend_from_slice(&report.amplitude_indices[i].to_le_bytes());
        if let Some(ph) = &report.phase_indices {
            if ph.len() != n {
                return Err(ReportError::LengthMismatch);
            }
            out.extend_from_slice(&ph[i].to_le_bytes());
        }
    }
    Ok(out)
}

/// Parse the byte layout back into a report. Exact length required.
pub fn decode_bytes(bytes: &[u8]) -> Result<TdcpReport, ReportError> {
    if bytes.len() < 13 {
        return Err(ReportError::Framing("truncated header"));
    }
    if bytes[0] != REPORT_VERSION {
        return Err(ReportError::Framing("unknown version"));
    }
    let flags = bytes[1];
    if flags & !1 != 0 {
        return Err(ReportError::Framing("unknown flags"));
    }
    let with_phase = flags & 1 == 1;
    let n = bytes[2] as usize;
    if n == 0 || n > MAX_DELAYS {
        return Err(ReportError::Framing("bad delay count"));
    }
    let amp_bits = bytes[3];
    let phase_bits = bytes[4];
    check_bits(amp_bits).map_err(|_| ReportError::Framing("bad amplitude bits"))?;
    if with_phase {
        check_bits(phase_bits).map_err(|_| ReportError::Framing("bad phase bits"))?;
    } else if phase_bits != 0 {
        return Err(ReportError::Framing(
            "phase bits present without phase flag",
        ));
    }
    let time_bits = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let per_delay = if with_phase { 5 } else { 3 };
    if bytes.len() != 13 + n * per_delay {
        return Err(ReportError::Framing("length does not match delay count"));
    }
    let mut delays = Vec::with_capacity(n);
    let mut amplitude_indices = Vec::with_capacity(n);
    let mut phase_indices = if with_phase {
        Some(Vec::with_capacity(n))
    } else {
        None
    };
    let mut pos = 13;
    for _ in 0..n {
        let delay = TdcpDelay::from_wire_tag(bytes[pos]);
        if !delay.is_allowed() {
            return Err(ReportError::Framing("delay tag outside the allowed set"));
        }
        delays.push(delay);
        let amp = u16::from_le_bytes(bytes[pos + 1..pos + 3].try_into().unwrap());
        if amp as u32 >= 1u32 << amp_bits {
            return Err(ReportError::IndexOutOfRange);
        }
        amplitude_indices.push(amp);
        if let Some(ph) = phase_indices.as_mut() {
            let p = u16::from_le_bytes(bytes[pos + 3..pos + 5].try_into().unwrap());
            if p as u32 >= 1u32 << phase_bits {
                return Err(ReportError::IndexOutOfRange);
            }
            ph.push(p);
        }
        pos += per_delay;
    }
    Ok(TdcpReport {
        delays,
        amplitude_indices,
        phase_indices,
        amp_bits,
        phase_bits: if with_phase { phase_bits } else { 0 },
        measurement_time_s: f64::from_bits(time_bits),
    })
}

/// Parse a delay label like `4os`, `1slot` or `10slot`.
pub fn parse_delay_label(s: &str) -> Option<TdcpDelay> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("4os") {
        return Some(TdcpDelay::FourSymbols);
    }
    let digits: String = t.chars().take_while(|c| c.is_ascii_digit()).collect();
    let rest = &t[digits.len()..];
    if digits.is_empty()
        || !(rest.eq_ignore_ascii_case("slot") || rest.eq_ignore_ascii_case("slots"))
    {
        return None;
    }
    digits.parse::<u8>().ok().map(TdcpDelay::Slots)
}
