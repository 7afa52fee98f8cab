//! `fmcwdb`: run OOK-FMCW distance-bounding experiments from a flat config
//! file and write the results as CSV.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fmcwdb::config::Config;
use fmcwdb::experiments::{
    run_attack_sweep, run_ber_sweep, run_detector_roc, run_range_sweep, run_simulate, RunOptions,
};
use fmcwdb::results::ResultTable;

#[derive(Parser)]
#[command(
    name = "fmcwdb",
    about = "OOK-FMCW distance-bounding simulator and experiment runner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (flat key=value lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Base RNG seed; overrides the config file and FMCWDB_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output CSV path (default: <experiment>.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for Monte-Carlo trials (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Directory for waveform captures (simulate only).
    #[arg(long, global = true)]
    dump_waveforms: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one honest exchange and report every verifier output.
    Simulate,
    /// Bit error rate versus SNR at fixed slot period.
    BerSweep,
    /// Ranging precision over a bandwidth x slot-period grid.
    RangeSweep,
    /// Attacker distance-gain curves, analytic plus simulated points.
    AttackSweep,
    /// Late-commit detector detection/false-positive rates.
    DetectorRoc,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::BerSweep => "ber-sweep",
            Command::RangeSweep => "range-sweep",
            Command::AttackSweep => "attack-sweep",
            Command::DetectorRoc => "detector-roc",
        }
    }
}

fn resolve_seed(cli_seed: Option<u64>, cfg: &Config) -> Result<u64> {
    if let Some(seed) = cli_seed {
        return Ok(seed);
    }
    if let Ok(env_seed) = std::env::var("FMCWDB_SEED") {
        return env_seed
            .parse::<u64>()
            .with_context(|| format!("FMCWDB_SEED=`{env_seed}` is not a u64"));
    }
    cfg.u64_or("seed", 1)
}

fn run() -> Result<()> {
    let cli = Cli::parse();

    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let opts = RunOptions {
        seed: resolve_seed(cli.seed, &cfg)?,
        jobs: cli.jobs,
        dump_dir: cli.dump_waveforms.clone(),
    };

    let table: ResultTable = match cli.command {
        Command::Simulate => run_simulate(&cfg, &opts)?,
        Command::BerSweep => run_ber_sweep(&cfg, &opts)?,
        Command::RangeSweep => run_range_sweep(&cfg, &opts)?,
        Command::AttackSweep => run_attack_sweep(&cfg, &opts)?,
        Command::DetectorRoc => run_detector_roc(&cfg, &opts)?,
    };

    let out = cli
        .out
        .or_else(|| cfg.get_str("out").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cli.command.name())));
    std::fs::write(&out, table.to_csv())
        .with_context(|| format!("cannot write `{}`", out.display()))?;

    println!(
        "{}: {} result rows (seed {}) -> {}",
        cli.command.name(),
        table.rows().len(),
        opts.seed,
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
