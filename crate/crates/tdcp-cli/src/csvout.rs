//! CSV emission. Layout is part of the contract: `.` decimal separator,
//! fixed column order, header row, LF line endings, fixed float precision —
//! reruns with the same scenario and seed must be byte-identical.

use std::path::Path;

use tdcp_core::linkeval::usecase::ResultRow;

use crate::error::CliError;
use crate::runner::AutocorrRow;

fn fmt_f(v: f64) -> String {
    format!("{v:.6}")
}

pub fn autocorr_csv(rows: &[AutocorrRow]) -> String {
    let mut out = String::from("model,direction_deg,speed_kmh,delay_s,mean_amplitude,stddev\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.9},{},{}\n",
            r.model,
            r.direction_deg,
            r.speed_kmh,
            r.delay_s,
            fmt_f(r.mean_amplitude),
            fmt_f(r.stddev),
        ));
    }
    out
}

pub fn usecase_csv(rows: &[ResultRow], trs_snr_db: f64, pdsch_snr_db: f64) -> String {
    let mut out = String::from(
        "speed_kmh,scheme,delay_label,trs_snr_db,pdsch_snr_db,mean_se_bpshz,mean_metric\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.speed_kmh,
            r.scheme,
            r.delay_label,
            trs_snr_db,
            pdsch_snr_db,
            fmt_f(r.mean_se_bpshz),
            fmt_f(r.mean_metric),
        ));
    }
    out
}

pub fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}
