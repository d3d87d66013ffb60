//! CSV / JSON emission and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::harness::CampaignResult;
use crate::jdeer::Rule;
use crate::signal::SystemConfig;

pub const CSV_HEADER: &str =
    "snr_db,m,i_joint,i_detect,i_estimate,i_emp_sap,i_emp_cascaded_detect,i_emp_cascaded_estimate,ed_joint,ed_emp,mc_std_err";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One `(SNR, checkpoint)` row of figure data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub snr_db: f64,
    pub m: usize,
    pub i_joint: f64,
    pub i_detect: f64,
    pub i_estimate: f64,
    pub i_emp_sap: Option<f64>,
    pub i_emp_cascaded_detect: Option<f64>,
    pub i_emp_cascaded_estimate: Option<f64>,
    pub ed_joint: f64,
    pub ed_emp: Option<f64>,
    pub mc_std_err: f64,
}

/// Rows for every checkpoint of every campaign. Theoretical columns come from
/// the full campaign; empirical columns from the checkpoint prefix.
pub fn rows(results: &[CampaignResult]) -> Vec<ResultRow> {
    results
        .iter()
        .flat_map(|r| {
            let t = r.theoretical;
            let snr_db = r.snr_db();
            r.series.iter().map(move |cp| {
                let sap = cp.per_rule.get(&Rule::Sap);
                let cascade = cp.per_rule.get(&Rule::Cascaded);
                ResultRow {
                    snr_db,
                    m: cp.m,
                    i_joint: t.i_joint,
                    i_detect: t.i_detect,
                    i_estimate: t.i_estimate,
                    i_emp_sap: sap.map(|s| s.information()),
                    i_emp_cascaded_detect: cascade.map(|s| s.detection_information()),
                    i_emp_cascaded_estimate: cascade.map(|s| s.estimation_information()),
                    ed_joint: t.ed_joint,
                    ed_emp: sap.map(|s| s.entropy_deviation()),
                    mc_std_err: t.mc_std_err,
                }
            })
        })
        .collect()
}

/// `%.12g`-style formatting: 12 significant digits, trailing zeros trimmed.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

pub fn csv_bytes(rows: &[ResultRow]) -> Vec<u8> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_number(r.snr_db),
            r.m,
            format_number(r.i_joint),
            format_number(r.i_detect),
            format_number(r.i_estimate),
            opt(r.i_emp_sap),
            opt(r.i_emp_cascaded_detect),
            opt(r.i_emp_cascaded_estimate),
            format_number(r.ed_joint),
            opt(r.ed_emp),
            format_number(r.mc_std_err),
        );
    }
    out.into_bytes()
}

/// 64-bit FNV-1a.
pub fn digest(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

pub fn digest_hex(bytes: &[u8]) -> String {
    format!("{:016x}", digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: SystemConfig,
    pub tool_version: String,
    pub master_seed: u64,
    pub command_line: String,
    /// UTC, RFC 3339.
    pub timestamp: String,
    /// FNV-1a of the emitted CSV bytes (or of the verdict JSON for verify runs).
    pub result_digest: String,
}

impl RunManifest {
    pub fn new(config: &SystemConfig, command_line: &str, payload: &[u8]) -> Self {
        Self {
            config: *config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.seed,
            command_line: command_line.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            result_digest: digest_hex(payload),
        }
    }
}

#[derive(Debug, Serialize)]
struct JsonDocument<'a> {
    manifest: &'a RunManifest,
    rows: &'a [ResultRow],
}

/// Path of the manifest written next to a CSV file.
pub fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Serialized output: the main payload plus, for CSV files, a sidecar manifest.
pub struct Rendered {
    pub main: Vec<u8>,
    pub manifest: RunManifest,
}

pub fn render(results: &[CampaignResult], format: Format, config: &SystemConfig, command_line: &str) -> Rendered {
    let rows = rows(results);
    let csv = csv_bytes(&rows);
    let manifest = RunManifest::new(config, command_line, &csv);
    let main = match format {
        Format::Csv => csv,
        Format::Json => {
            let mut v =
                serde_json::to_vec_pretty(&JsonDocument { manifest: &manifest, rows: &rows }).expect("rows serialize");
            v.push(b'\n');
            v
        }
    };
    Rendered { main, manifest }
}
