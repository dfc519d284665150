//! Clustered-delay-line table loading.
//!
//! Tables are plain text, one cluster per row with columns
//! `(normalized_delay, power_db, aod_deg, aoa_deg, zod_deg, zoa_deg)`,
//! followed by keyed scalar lines for the per-cluster ray spreads and the
//! cross-polarization ratio. `#` starts a comment. The 20 fixed ray offsets
//! default to the standard unit-RMS set and may be overridden with a
//! `ray_offsets` key.

use alloc::string::ToString;
use alloc::vec::Vec;

use super::{format_parse_err, ChannelError};

/// Fixed intra-cluster ray offset angles (unitless, unit RMS), scaled by the
/// per-cluster angle spread to place the 20 rays of each cluster.
pub const DEFAULT_RAY_OFFSETS: [f64; 20] = [
    0.0447, -0.0447, 0.1413, -0.1413, 0.2492, -0.2492, 0.3715, -0.3715, 0.5129, -0.5129, 0.6797,
    -0.6797, 0.8844, -0.8844, 1.1481, -1.1481, 1.5195, -1.5195, 2.1551, -2.1551,
];

#[derive(Debug, Clone, PartialEq)]
pub struct CdlCluster {
    pub delay_norm: f64,
    pub power_db: f64,
    pub aod_deg: f64,
    pub aoa_deg: f64,
    pub zod_deg: f64,
    pub zoa_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdlTable {
    pub clusters: Vec<CdlCluster>,
    pub c_asd_deg: f64,
    pub c_asa_deg: f64,
    pub c_zsd_deg: f64,
    pub c_zsa_deg: f64,
    pub xpr_db: f64,
    pub ray_offsets: [f64; 20],
}

impl CdlTable {
    /// Parse a table from text. See the module docs for the format.
    pub fn parse(text: &str) -> Result<Self, ChannelError> {
        let mut clusters = Vec::new();
        let mut c_asd = None;
        let mut c_asa = None;
        let mut c_zsd = None;
        let mut c_zsa = None;
        let mut xpr = None;
        let mut offsets: Option<Vec<f64>> = None;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(eq) = line.find('=') {
                let key = line[..eq].trim();
                let value = line[eq + 1..].trim();
                let parse_one = || -> Result<f64, ChannelError> {
                    value
                        .parse::<f64>()
                        .map_err(|_| format_parse_err(line_no, "expected a number"))
                };
                match key {
                    "c_asd_deg" => c_asd = Some(parse_one()?),
                    "c_asa_deg" => c_asa = Some(parse_one()?),
                    "c_zsd_deg" => c_zsd = Some(parse_one()?),
                    "c_zsa_deg" => c_zsa = Some(parse_one()?),
                    "xpr_db" => xpr = Some(parse_one()?),
                    "ray_offsets" => {
                        let vals: Result<Vec<f64>, _> =
                            value.split(',').map(|v| v.trim().parse::<f64>()).collect();
                        offsets = Some(vals.map_err(|_| {
                            format_parse_err(line_no, "ray_offsets must be comma-separated numbers")
                        })?);
                    }
                    other => {
                        return Err(format_parse_err(
                            line_no,
                            &alloc::format!("unknown key '{other}'"),
                        ))
                    }
                }
            } else {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 6 {
                    return Err(format_parse_err(
                        line_no,
                        "cluster row needs 6 columns (delay, power_db, aod, aoa, zod, zoa)",
                    ));
                }
                let mut nums = [0.0; 6];
                for (i, f) in fields.iter().enumerate() {
                    nums[i] = f
                        .parse::<f64>()
                        .map_err(|_| format_parse_err(line_no, "expected a number"))?;
                }
                clusters.push(CdlCluster {
                    delay_norm: nums[0],
                    power_db: nums[1],
                    aod_deg: nums[2],
                    aoa_deg: nums[3],
                    zod_deg: nums[4],
                    zoa_deg: nums[5],
                });
            }
        }

        let missing = |what: &str| ChannelError::BadTable(alloc::format!("missing key '{what}'"));
        let table = CdlTable {
            clusters,
            c_asd_deg: c_asd.ok_or_else(|| missing("c_asd_deg"))?,
            c_asa_deg: c_asa.ok_or_else(|| missing("c_asa_deg"))?,
            c_zsd_deg: c_zsd.ok_or_else(|| missing("c_zsd_deg"))?,
            c_zsa_deg: c_zsa.ok_or_else(|| missing("c_zsa_deg"))?,
            xpr_db: xpr.ok_or_else(|| missing("xpr_db"))?,
            ray_offsets: match offsets {
                None => DEFAULT_RAY_OFFSETS,
                Some(v) => {
                    let arr: [f64; 20] = v.try_into().map_err(|_| {
                        ChannelError::BadTable(
                            "ray_offsets must have exactly 20 values".to_string(),
                        )
                    })?;
                    arr
                }
            },
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        if self.clusters.is_empty() {
            return Err(ChannelError::BadTable("no cluster rows".to_string()));
        }
        let min_delay = self
            .clusters
            .iter()
            .map(|c| c.delay_norm)
            .fold(f64::INFINITY, f64::min);
        if min_delay != 0.0 {
            return Err(ChannelError::BadTable(
                "normalized delays must start at 0".to_string(),
            ));
        }
        if self.clusters.iter().any(|c| c.delay_norm < 0.0) {
            return Err(ChannelError::BadTable("negative delay".to_string()));
        }
        for &s in &[
            self.c_asd_deg,
            self.c_asa_deg,
            self.c_zsd_deg,
            self.c_zsa_deg,
        ] {
            if !(s > 0.0) {
                return Err(ChannelError::BadTable(
                    "ray spreads must be > 0".to_string(),
                ));
            }
        }
        Ok(())
    }

    /// Linear cluster powers, normalized to unit total.
    pub(super) fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .clusters
            .iter()
            .map(|c| crate::math::db_to_linear(c.power_db))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}
