//! Command-line encode/decode of reports against a scenario's reporting
//! configuration.

use tdcp_core::report::{build_report, decode_bytes, encode_bytes, parse_report, ReportError};

use crate::error::CliError;
use crate::scenario::Scenario;

fn parse_float_list(spec: &str, what: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::config(format!("bad {what} value '{}'", s.trim())))
        })
        .collect()
}

/// Validate, quantize and serialize a report; returns the bytes plus a
/// printable summary.
pub fn encode(
    scenario: &Scenario,
    amplitudes: &str,
    phases: Option<&str>,
    time_s: f64,
) -> Result<(Vec<u8>, String), CliError> {
    scenario.validate_report_config()?;
    let amps = parse_float_list(amplitudes, "amplitude")?;
    let ph = phases.map(|p| parse_float_list(p, "phase")).transpose()?;
    let report = build_report(&scenario.report, &amps, ph.as_deref(), time_s)
        .map_err(|e| CliError::config(format!("{e}")))?;
    let bytes = encode_bytes(&report).map_err(|e| CliError::config(format!("{e}")))?;
    let mut summary = format!("{} bytes: {}\n", bytes.len(), hex(&bytes));
    for v in
        parse_report(&report, &scenario.report).map_err(|e| CliError::runtime(format!("{e}")))?
    {
        summary.push_str(&format_value(&v));
    }
    Ok((bytes, summary))
}

/// Deserialize and dequantize a report, checking it against the scenario's
/// reporting configuration.
pub fn decode(scenario: &Scenario, bytes: &[u8]) -> Result<String, CliError> {
    let report = decode_bytes(bytes).map_err(|e| match e {
        ReportError::Framing(_) | ReportError::IndexOutOfRange => CliError::runtime(format!("{e}")),
        other => CliError::config(format!("{other}")),
    })?;
    let values =
        parse_report(&report, &scenario.report).map_err(|e| CliError::config(format!("{e}")))?;
    let mut out = format!("measurement_time_s={}\n", report.measurement_time_s);
    for v in values {
        out.push_str(&format_value(&v));
    }
    Ok(out)
}

fn format_value(v: &tdcp_core::report::DecodedValue) -> String {
    match v.phase {
        Some(p) => format!(
            "delay={} amplitude={:.6} phase={:.6}\n",
            v.delay, v.amplitude, p
        ),
        None => format!("delay={} amplitude={:.6}\n", v.delay, v.amplitude),
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn scenario(text: &str) -> Scenario {
        Scenario::from_str_with_base(text, &PathBuf::from(".")).unwrap()
    }

    #[test]
    fn encode_decode_round_trip() {
        let s = scenario("[channel]\nmodel = tdl\n[report]\ndelays = 1slot\n");
        let (bytes, _) = encode(&s, "0.97", None, 0.0).unwrap();
        let text = decode(&s, &bytes).unwrap();
        assert!(text.contains("delay=1slot"), "{text}");
        // 0.97 quantized at 7 bits: within a half step.
        let amp: f64 = text
            .lines()
            .find(|l| l.starts_with("delay="))
            .and_then(|l| l.split("amplitude=").nth(1))
            .unwrap()
            .trim()
            .parse()
            .unwrap();
        assert!((amp - 0.97).abs() <= 0.5 / 128.0 + 1e-9);
    }

    #[test]
    fn five_delays_fail_validation() {
        let s = scenario(
            "[channel]\nmodel = tdl\n[trs]\nsecond_offset_slots = 2\n[report]\ndelays = 4os, 1slot, 2slot, 3slot, 4slot\n",
        );
        let err = encode(&s, "0.9,0.9,0.9,0.9,0.9", None, 0.0).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn truncated_bytes_are_a_framing_error() {
        let s = scenario("[channel]\nmodel = tdl\n[report]\ndelays = 1slot\n");
        let (bytes, _) = encode(&s, "0.5", None, 0.0).unwrap();
        let err = decode(&s, &bytes[..bytes.len() - 1]).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(format!("{err}").contains("framing"), "{err}");
    }
}
