//! CSV tables and the JSON metadata sidecar.
//!
//! Every CSV starts with a `# <schema> v<N>` line followed by a header row.
//! Readers skip `#` lines.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{ContextShift, FitResult, Observable, ScanRow};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::protocols::{ContextCounts, FringeRecord, PhaseProtocol, XValue};

pub const SWEEP_SCHEMA: &str = "# ebcm-sweep v1";
pub const ALPHA_SCAN_SCHEMA: &str = "# ebcm-alpha-scan v1";
pub const SWITCH_SUMMARY_SCHEMA: &str = "# ebcm-switch-summary v1";
pub const FIT_SCHEMA: &str = "# ebcm-fit v1";
pub const SIDECAR_FORMAT: &str = "ebcm-run/1";

/// Everything needed to reproduce a run, written next to its CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub command: String,
    pub version: String,
    pub master_seed: u64,
    pub config: RunConfig,
    /// Command-specific details (prediction seeds, fit flags).
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl Sidecar {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            format: SIDECAR_FORMAT.to_string(),
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            config: config.clone(),
            details: serde_json::Value::Null,
        }
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecar serializes") + "\n"
    }

    /// `<out>` with its extension replaced by `meta.json`.
    pub fn path_for(out: &Path) -> PathBuf {
        out.with_extension("meta.json")
    }

    pub fn write(&self, out: &Path) -> Result<PathBuf> {
        let path = Self::path_for(out);
        write_file(&path, self.to_json().as_bytes())?;
        Ok(path)
    }
}

/// `<stem>.summary.csv` beside `out`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.csv")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn render<T: Serialize>(schema: &str, rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut buf = format!("{schema}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in rows {
            w.serialize(row).expect("in-memory CSV write");
        }
        w.flush().expect("in-memory CSV flush");
    }
    buf
}

fn write_table<T: Serialize>(
    path: &Path,
    schema: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    write_file(path, &render(schema, rows))
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path, schema: &str) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first = text.lines().next().unwrap_or_default();
    let family = schema.rsplit_once(' ').map_or(schema, |(f, _)| f);
    if !first.starts_with(family) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected a `{schema}` header line, found `{first}`"),
        });
    }
    if first.trim() != schema {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("unsupported schema version `{first}`, this build reads `{schema}`"),
        });
    }
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

/// One row per fringe record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phi0_rad: f64,
    pub protocol: PhaseProtocol,
    pub set_index: u32,
    pub counts_port0: u64,
    pub counts_port1: u64,
    pub darks: u64,
    pub trials: u64,
    pub sub_seed: u64,
    pub trials_xm: u64,
    pub counts_xm: u64,
    pub darks_xm: u64,
    pub trials_xp: u64,
    pub counts_xp: u64,
    pub darks_xp: u64,
    pub darks_subtracted: bool,
    pub subtraction_underflow: bool,
}

impl From<&FringeRecord> for SweepRow {
    fn from(r: &FringeRecord) -> Self {
        let [m, p] = r.contexts;
        Self {
            phi0_rad: r.phi0,
            protocol: r.protocol,
            set_index: r.set_index,
            counts_port0: r.counts_port0,
            counts_port1: r.counts_port1,
            darks: r.darks_recorded,
            trials: r.trials,
            sub_seed: r.seed,
            trials_xm: m.trials,
            counts_xm: m.counts_port0,
            darks_xm: m.darks,
            trials_xp: p.trials,
            counts_xp: p.counts_port0,
            darks_xp: p.darks,
            darks_subtracted: r.darks_subtracted,
            subtraction_underflow: r.subtraction_underflow,
        }
    }
}

impl From<SweepRow> for FringeRecord {
    fn from(s: SweepRow) -> Self {
        let mut r = FringeRecord::empty(s.phi0_rad, s.protocol, s.set_index, s.sub_seed);
        r.counts_port0 = s.counts_port0;
        r.counts_port1 = s.counts_port1;
        r.darks_recorded = s.darks;
        r.trials = s.trials;
        r.contexts = [
            ContextCounts {
                trials: s.trials_xm,
                counts_port0: s.counts_xm,
                darks: s.darks_xm,
            },
            ContextCounts {
                trials: s.trials_xp,
                counts_port0: s.counts_xp,
                darks: s.darks_xp,
            },
        ];
        r.darks_subtracted = s.darks_subtracted;
        r.subtraction_underflow = s.subtraction_underflow;
        r
    }
}

pub fn render_records(records: &[FringeRecord]) -> Vec<u8> {
    render(SWEEP_SCHEMA, records.iter().map(SweepRow::from))
}

pub fn write_records(path: &Path, records: &[FringeRecord]) -> Result<()> {
    write_file(path, &render_records(records))
}

pub fn read_records(path: &Path) -> Result<Vec<FringeRecord>> {
    Ok(read_table::<SweepRow>(path, SWEEP_SCHEMA)?
        .into_iter()
        .map(FringeRecord::from)
        .collect())
}

/// One row per (model, alpha, context). `alpha` is empty on QM rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaScanRow {
    pub model: String,
    pub alpha: Option<f64>,
    pub context: String,
    pub chi2: f64,
    pub dof: usize,
    pub reduced_chi2: f64,
}

impl From<&ScanRow> for AlphaScanRow {
    fn from(r: &ScanRow) -> Self {
        Self {
            model: if r.alpha().is_some() { "ebcm" } else { "qm" }.to_string(),
            alpha: r.alpha(),
            context: r.context.to_string(),
            chi2: r.report.chi2,
            dof: r.report.dof,
            reduced_chi2: r.report.reduced_chi2,
        }
    }
}

pub fn write_alpha_scan(path: &Path, rows: &[ScanRow]) -> Result<()> {
    write_table(path, ALPHA_SCAN_SCHEMA, rows.iter().map(AlphaScanRow::from))
}

pub fn read_alpha_scan(path: &Path) -> Result<Vec<AlphaScanRow>> {
    read_table(path, ALPHA_SCAN_SCHEMA)
}

/// Fast-versus-slow switching comparison for one context. Phase columns are
/// empty when a fit is missing; `fit_ok` is false unless both fits converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchSummaryRow {
    pub context: String,
    pub fast_protocol: PhaseProtocol,
    pub slow_protocol: PhaseProtocol,
    pub phase_fast: Option<f64>,
    pub sigma_fast: Option<f64>,
    pub phase_slow: Option<f64>,
    pub sigma_slow: Option<f64>,
    pub shift: Option<f64>,
    pub sigma_shift: Option<f64>,
    pub fit_ok: bool,
}

impl SwitchSummaryRow {
    pub fn from_shift(s: &ContextShift, fast: PhaseProtocol, slow: PhaseProtocol) -> Self {
        Self {
            context: s.context.to_string(),
            fast_protocol: fast,
            slow_protocol: slow,
            phase_fast: Some(s.fast.phase_offset),
            sigma_fast: Some(s.fast.sigma_phase()),
            phase_slow: Some(s.slow.phase_offset),
            sigma_slow: Some(s.slow.sigma_phase()),
            shift: Some(s.shift),
            sigma_shift: Some(s.sigma),
            fit_ok: true,
        }
    }

    pub fn failed(
        x: XValue,
        fast: PhaseProtocol,
        slow: PhaseProtocol,
        fits: [Option<&FitResult>; 2],
    ) -> Self {
        Self {
            context: x.to_string(),
            fast_protocol: fast,
            slow_protocol: slow,
            phase_fast: fits[0].map(|f| f.phase_offset),
            sigma_fast: fits[0].map(FitResult::sigma_phase),
            phase_slow: fits[1].map(|f| f.phase_offset),
            sigma_slow: fits[1].map(FitResult::sigma_phase),
            shift: None,
            sigma_shift: None,
            fit_ok: false,
        }
    }
}

pub fn write_switch_summary(path: &Path, rows: &[SwitchSummaryRow]) -> Result<()> {
    write_table(path, SWITCH_SUMMARY_SCHEMA, rows)
}

pub fn read_switch_summary(path: &Path) -> Result<Vec<SwitchSummaryRow>> {
    read_table(path, SWITCH_SUMMARY_SCHEMA)
}

/// One fitted fringe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub protocol: PhaseProtocol,
    /// `port0`, `x=-1` or `x=+1`.
    pub observable: String,
    pub amplitude: f64,
    pub visibility: f64,
    pub phase_offset: f64,
    pub sigma_amplitude: f64,
    pub sigma_visibility: f64,
    pub sigma_phase: f64,
    pub residual_sum: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub converged: bool,
    pub phase_identifiable: bool,
    pub visibility_excess: bool,
}

pub fn observable_label(o: Observable) -> String {
    match o {
        Observable::Port0 => "port0".to_string(),
        Observable::Context(x) => x.to_string(),
    }
}

impl FitRow {
    pub fn new(protocol: PhaseProtocol, observable: Observable, f: &FitResult) -> Self {
        Self {
            protocol,
            observable: observable_label(observable),
            amplitude: f.amplitude,
            visibility: f.visibility,
            phase_offset: f.phase_offset,
            sigma_amplitude: f.sigma_amplitude(),
            sigma_visibility: f.sigma_visibility(),
            sigma_phase: f.sigma_phase(),
            residual_sum: f.residual_sum,
            n_points: f.n_points,
            iterations: f.iterations,
            converged: f.converged,
            phase_identifiable: f.phase_identifiable,
            visibility_excess: f.visibility_excess,
        }
    }
}

pub fn write_fits(path: &Path, rows: &[FitRow]) -> Result<()> {
    write_table(path, FIT_SCHEMA, rows)
}

pub fn read_fits(path: &Path) -> Result<Vec<FitRow>> {
    read_table(path, FIT_SCHEMA)
}
