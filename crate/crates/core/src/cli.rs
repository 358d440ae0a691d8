//! The `ebcm` command line: seeded batch jobs writing CSV plus a sidecar.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    alpha_scan, check_coverage, fit_points, fringe_points, phase_shift_between, scan_protocol,
    subtract_darks, ContextShift, FitResult, Observable,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::io::{self, FitRow, Sidecar, SwitchSummaryRow};
use crate::protocols::{
    run_sweep, run_switch_rate_comparison, FringeRecord, PhaseProtocol, XValue,
};
use crate::qm::QmReference;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FIT: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ebcm",
    version,
    about = "Adaptive-beamsplitter interferometer simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Overrides `master_seed` from the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replica-level parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full acquisition schedule, one CSV row per set.
    Sweep(RunArgs),
    /// Reduced chi-square of QM reference data against EBCM for each alpha.
    AlphaScan(RunArgs),
    /// Per-photon against block switching, with a fitted phase shift summary.
    SwitchCompare(RunArgs),
    /// Fits every fringe in a records CSV.
    Fit(FitArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Records CSV written by `sweep` or `switch-compare`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// When given, expected dark counts of its detector are subtracted first.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Domain { .. } | Error::FitPrecondition(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Csv { .. } | Error::Parse { .. } => EXIT_IO,
        Error::FitFailed(_) => EXIT_FIT,
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::config("threads", e.to_string())),
        },
        None => dispatch(&cli),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Sweep(a) => cmd_sweep(&a.config, &a.out, cli.seed),
        Command::AlphaScan(a) => cmd_alpha_scan(&a.config, &a.out, cli.seed),
        Command::SwitchCompare(a) => cmd_switch_compare(&a.config, &a.out, cli.seed),
        Command::Fit(a) => cmd_fit(&a.input, &a.out, a.config.as_deref()),
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    if let Some(s) = seed {
        config.master_seed = s;
    }
    Ok(config)
}

pub fn cmd_sweep(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let config = load(config_path, seed)?;
    let records = run_sweep(&config)?;
    io::write_records(out, &records)?;
    Sidecar::new("sweep", &config).write(out)?;
    Ok(())
}

pub fn cmd_alpha_scan(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let config = load(config_path, seed)?;
    config.validate_alpha_scan()?;
    let reference = QmReference {
        phi0_grid: config.phi0_grid.values(),
        protocols: config.protocols.clone(),
        photons_per_point: config.photons_per_set,
        beta: config.beta,
        detector: config.detector,
        master_seed: config.master_seed,
    };
    let records = reference.simulate(0);
    let scan = alpha_scan(&config, &config.alpha_grid, &records)?;
    io::write_alpha_scan(out, &scan.rows)?;

    let mut sidecar = Sidecar::new("alpha-scan", &config);
    let first = scan.predictions.first();
    sidecar.details = serde_json::json!({
        "n_free": 0,
        "reference_protocol": scan_protocol(&config),
        "reference_seeds": records.iter().map(|r| r.seed).collect::<Vec<_>>(),
        "replicas": config.replicas,
        "prediction_seeds": first.map(|p| p.seeds.clone()),
        "burn_in": scan.predictions.iter().map(|p| (p.alpha.to_string(), p.burn_in)).collect::<std::collections::BTreeMap<_, _>>(),
    });
    sidecar.write(out)?;
    Ok(())
}

fn fit_context(records: &[FringeRecord], x: XValue) -> Result<FitResult> {
    fit_points(&fringe_points(records, Observable::Context(x)))
}

pub fn cmd_switch_compare(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let config = load(config_path, seed)?;
    check_coverage(&config.phi0_grid.values())
        .map_err(|e| Error::config("phi0_grid", e.to_string()))?;
    let (fast, slow) = run_switch_rate_comparison(&config)?;
    let mut all = fast.clone();
    all.extend(slow.iter().cloned());
    io::write_records(out, &all)?;

    let fast_protocol = PhaseProtocol::RandomPerPhoton;
    let slow_protocol = PhaseProtocol::RandomPerN(config.switch_block).canonical();
    let mut rows = Vec::new();
    let mut failure = None;
    for x in XValue::BOTH {
        let fits = (fit_context(&fast, x)?, fit_context(&slow, x)?);
        match phase_shift_between(&fits.0, &fits.1) {
            Ok((shift, sigma)) => {
                let s = ContextShift {
                    context: x,
                    fast: fits.0,
                    slow: fits.1,
                    shift,
                    sigma,
                };
                rows.push(SwitchSummaryRow::from_shift(
                    &s,
                    fast_protocol,
                    slow_protocol,
                ));
            }
            Err(e) => {
                rows.push(SwitchSummaryRow::failed(
                    x,
                    fast_protocol,
                    slow_protocol,
                    [Some(&fits.0), Some(&fits.1)],
                ));
                failure.get_or_insert(e);
            }
        }
    }
    io::write_switch_summary(&io::summary_path(out), &rows)?;
    let mut sidecar = Sidecar::new("switch-compare", &config);
    sidecar.details = serde_json::json!({
        "fast_protocol": fast_protocol,
        "slow_protocol": slow_protocol,
        "fit_ok": failure.is_none(),
    });
    sidecar.write(out)?;
    failure.map_or(Ok(()), Err)
}

/// Fits every (protocol, observable) fringe of the input records. Contexts
/// with no trials are skipped.
pub fn cmd_fit(input: &Path, out: &Path, config_path: Option<&Path>) -> Result<()> {
    let mut records = io::read_records(input)?;
    if let Some(path) = config_path {
        let config = RunConfig::load(path)?;
        records = records
            .iter()
            .map(|r| subtract_darks(r, &config.detector))
            .collect();
    }
    let mut protocols: Vec<PhaseProtocol> = Vec::new();
    for r in &records {
        if !protocols.contains(&r.protocol) {
            protocols.push(r.protocol);
        }
    }
    let mut rows = Vec::new();
    let mut failed = false;
    for protocol in protocols {
        let subset: Vec<FringeRecord> = records
            .iter()
            .filter(|r| r.protocol == protocol)
            .cloned()
            .collect();
        let observables = std::iter::once(Observable::Port0).chain(
            XValue::BOTH
                .into_iter()
                .filter(|&x| protocol.is_random() && subset.iter().any(|r| r.context(x).trials > 0))
                .map(Observable::Context),
        );
        for obs in observables {
            let fit = fit_points(&fringe_points(&subset, obs))?;
            failed |= !fit.converged;
            rows.push(FitRow::new(protocol, obs, &fit));
        }
    }
    io::write_fits(out, &rows)?;
    if failed {
        return Err(Error::FitFailed(
            "at least one fringe fit did not converge".into(),
        ));
    }
    Ok(())
}
