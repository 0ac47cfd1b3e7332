use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::verify::StatReport;

/// Significant digits written for every number.
pub const SIG_DIGITS: usize = 13;

/// Decimal (non-exponent) rendering with [`SIG_DIGITS`] significant digits,
/// trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i64;
    let decimals = (SIG_DIGITS as i64 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit; one digit too many is harmless
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// Per-checkpoint summary written to the series file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub mean_p: f64,
    pub se_p: f64,
    pub mean_lambda: f64,
    pub se_lambda: f64,
    pub mean_abs_gap: f64,
    pub qv_x_mean: f64,
}

pub const SERIES_HEADER: [&str; 7] = [
    "t",
    "mean_P",
    "se_P",
    "mean_lambda",
    "se_lambda",
    "mean_absPgapGamma",
    "qv_X_mean",
];

pub fn write_series_csv(rows: &[SeriesRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SERIES_HEADER)?;
    for r in rows {
        w.write_record(
            [
                r.t,
                r.mean_p,
                r.se_p,
                r.mean_lambda,
                r.se_lambda,
                r.mean_abs_gap,
                r.qv_x_mean,
            ]
            .map(fmt_sig),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format checkpoint summary: one quantity at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointRow {
    pub t: f64,
    pub quantity: &'static str,
    pub mean: f64,
    pub se: f64,
}

pub fn write_checkpoints_csv(rows: &[CheckpointRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "quantity", "mean", "se"])?;
    for r in rows {
        w.write_record([
            fmt_sig(r.t),
            r.quantity.to_string(),
            fmt_sig(r.mean),
            fmt_sig(r.se),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A report with its role in the suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    /// Mandatory reports decide the exit status; the others are informational.
    pub mandatory: bool,
    #[serde(flatten)]
    pub report: StatReport,
}

/// One JSON record per line.
pub fn write_reports_jsonl(entries: &[SuiteEntry], path: &Path) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_reports_jsonl(path: &Path) -> Result<Vec<SuiteEntry>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

fn table_rows(entries: &[&SuiteEntry], out: &mut String) {
    let rows: Vec<[String; 5]> = entries
        .iter()
        .map(|e| {
            let r = &e.report;
            [
                r.name.clone(),
                format!("{:.6} ± {:.2e}", r.estimate, r.std_error),
                format!("{:.4}", r.statistic),
                format!("{:.4}", r.threshold),
                if r.passed { "PASS" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    let header = ["test", "estimate ± SE", "statistic", "threshold", "result"];
    let widths: Vec<usize> = (0..5)
        .map(|c| {
            rows.iter()
                .map(|r| r[c].chars().count())
                .chain([header[c].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: [&str; 5], out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(padded.join("  ").trim_end());
        out.push('\n');
    };
    line(header, out);
    for r in &rows {
        line([&r[0], &r[1], &r[2], &r[3], &r[4]], out);
    }
}

/// Human-readable table: mandatory tests, then informational ones when present.
pub fn summarize(entries: &[SuiteEntry]) -> String {
    let mut out = String::new();
    let mandatory: Vec<&SuiteEntry> = entries.iter().filter(|e| e.mandatory).collect();
    let info: Vec<&SuiteEntry> = entries.iter().filter(|e| !e.mandatory).collect();
    if !mandatory.is_empty() {
        out.push_str("mandatory\n");
        table_rows(&mandatory, &mut out);
    }
    if !info.is_empty() {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("informational\n");
        table_rows(&info, &mut out);
    }
    let failed = mandatory.iter().filter(|e| !e.report.passed).count();
    out.push_str(&format!(
        "\n{} of {} mandatory tests passed\n",
        mandatory.len() - failed,
        mandatory.len()
    ));
    out
}

/// An emitted file and its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest_file(dir: &Path, name: &str) -> Result<FileDigest> {
    let data = fs::read(dir.join(name))?;
    Ok(FileDigest {
        path: name.to_string(),
        sha256: hex::encode(Sha256::digest(&data)),
        bytes: data.len() as u64,
    })
}
