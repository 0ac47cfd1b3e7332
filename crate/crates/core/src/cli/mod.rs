//! Experiment orchestration behind the `kyle` binary: configs, suites and
//! on-disk artifacts.

pub mod config;
pub mod output;
mod suite;

pub use config::{load_config, parse_config, ExperimentConfig, Model, Overrides};
pub use output::{
    fmt_sig, read_reports_jsonl, summarize, write_checkpoints_csv, write_reports_jsonl,
    write_series_csv, CheckpointRow, FileDigest, SeriesRow, SuiteEntry, SERIES_HEADER,
};
pub use suite::{bernoulli_suite, general_suite, lambda_limit_tolerance, SuiteOutput};

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use output::digest_file;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "KYLE_OUTPUT_ROOT";
pub const SERIES_FILE: &str = "series.csv";
pub const CHECKPOINTS_FILE: &str = "checkpoints.csv";
pub const REPORTS_FILE: &str = "reports.jsonl";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const EXIT_OK: i32 = 0;
pub const EXIT_TEST_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// `simulate` writes path summaries only; `verify` adds the test battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Verify,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: Mode,
    pub overwrite: bool,
    /// Root for relative or missing output directories.
    pub output_root: Option<PathBuf>,
    /// Fixed manifest timestamp (RFC 3339); the current time when absent.
    pub timestamp: Option<String>,
}

impl RunOptions {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            overwrite: false,
            output_root: None,
            timestamp: None,
        }
    }
}

/// Record of one run: config echo, version, time and emitted files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub mode: Mode,
    pub version: String,
    pub timestamp: String,
    pub files: Vec<FileDigest>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub entries: Vec<SuiteEntry>,
}

impl RunOutcome {
    pub fn mandatory_passed(&self) -> bool {
        self.entries
            .iter()
            .filter(|e| e.mandatory)
            .all(|e| e.report.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.mandatory_passed() {
            EXIT_OK
        } else {
            EXIT_TEST_FAILURE
        }
    }
}

/// Exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Divergence { .. } | Error::DivergenceBudget { .. } => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG,
    }
}

/// RFC 3339 rendering of a Unix time.
pub fn timestamp_from_epoch(secs: i64) -> Result<String> {
    DateTime::<Utc>::from_timestamp(secs, 0)
        .map(|t| t.to_rfc3339())
        .ok_or_else(|| Error::Parse(format!("epoch {secs} out of range")))
}

/// Output directory: the configured one, joined to the root when relative, or
/// `<root>/<model>-seed<seed>` when none is configured.
pub fn resolve_output_dir(cfg: &ExperimentConfig, root: Option<&Path>) -> PathBuf {
    let root = root
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("runs"));
    match &cfg.output_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => root.join(d),
        None => {
            let model = match cfg.model {
                Model::Bernoulli => "bernoulli",
                Model::General => "general",
            };
            root.join(format!("{model}-seed{}", cfg.seed))
        }
    }
}

/// Create `dir`, refusing a non-empty existing directory unless `overwrite`.
pub fn prepare_output_dir(dir: &Path, overwrite: bool) -> Result<()> {
    if dir.exists() && fs::read_dir(dir)?.next().is_some() && !overwrite {
        return Err(Error::OutputExists(dir.display().to_string()));
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Run the suite for `cfg` and write its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    cfg.validate()?;
    let dir = resolve_output_dir(cfg, opts.output_root.as_deref());
    prepare_output_dir(&dir, opts.overwrite)?;
    let verify = opts.mode == Mode::Verify;
    let out = match cfg.model {
        Model::Bernoulli => bernoulli_suite(cfg, verify)?,
        Model::General => general_suite(cfg, verify)?,
    };
    let mut files = vec![SERIES_FILE, CHECKPOINTS_FILE];
    write_series_csv(&out.series, &dir.join(SERIES_FILE))?;
    write_checkpoints_csv(&out.checkpoints, &dir.join(CHECKPOINTS_FILE))?;
    if verify {
        write_reports_jsonl(&out.entries, &dir.join(REPORTS_FILE))?;
        fs::write(dir.join(SUMMARY_FILE), summarize(&out.entries))?;
        files.extend([REPORTS_FILE, SUMMARY_FILE]);
    }
    let timestamp = match &opts.timestamp {
        Some(t) => t.clone(),
        None => Utc::now().to_rfc3339(),
    };
    let manifest = RunManifest {
        config: cfg.clone(),
        mode: opts.mode,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp,
        files: files
            .iter()
            .map(|f| digest_file(&dir, f))
            .collect::<Result<Vec<_>>>()?,
    };
    fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(RunOutcome {
        dir,
        manifest,
        entries: out.entries,
    })
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    R,
    P,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r" => Ok(SweepParam::R),
            "p" => Ok(SweepParam::P),
            _ => Err(Error::Parse(format!(
                "cannot sweep `{s}` (expected r or p)"
            ))),
        }
    }
}

/// Run `cfg` once per value, each cell in its own subdirectory with its own
/// manifest, and write `sweep.csv` listing the cells.
pub fn sweep(
    cfg: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
    opts: &RunOptions,
) -> Result<Vec<RunOutcome>> {
    if values.is_empty() {
        return Err(Error::Parse("sweep needs at least one value".into()));
    }
    let base = resolve_output_dir(cfg, opts.output_root.as_deref());
    prepare_output_dir(&base, opts.overwrite)?;
    let mut cells = Vec::with_capacity(values.len());
    for &v in values {
        let mut cell = cfg.clone();
        let label = match param {
            SweepParam::R => {
                cell.r = v;
                format!("r{}", fmt_sig(v))
            }
            SweepParam::P => {
                cell.p = Some(v);
                format!("p{}", fmt_sig(v))
            }
        };
        cell.output_dir = Some(base.join(label));
        cells.push(run_experiment(&cell, opts)?);
    }
    let mut w = csv::Writer::from_path(base.join("sweep.csv"))?;
    w.write_record(["cell", "mandatory_passed", "mandatory_total", "exit_code"])?;
    for c in &cells {
        let name = c
            .dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mandatory: Vec<_> = c.entries.iter().filter(|e| e.mandatory).collect();
        let passed = mandatory.iter().filter(|e| e.report.passed).count();
        w.write_record([
            name,
            passed.to_string(),
            mandatory.len().to_string(),
            c.exit_code().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(cells)
}

/// Reports from a `reports.jsonl` file or a run directory containing one.
pub fn load_reports(path: &Path) -> Result<Vec<SuiteEntry>> {
    if path.is_dir() {
        read_reports_jsonl(&path.join(REPORTS_FILE))
    } else {
        read_reports_jsonl(path)
    }
}
