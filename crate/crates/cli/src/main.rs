#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::CliError;
use crate::config::{Config, Kind};

#[derive(Parser, Debug)]
#[command(
    name = "heatbath",
    version,
    about = "Heat-bath, generalized Langevin and Langevin simulations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration; presets are used for missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ensemble size
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Record the creation time in output headers
    #[arg(long)]
    timestamp: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Memory kernel on a lag grid
    KernelEval(Common),
    /// Markovian friction matrix
    Kappa(Common),
    /// Fluctuating force paths and their lag covariance
    NoiseSample(Common),
    /// Reduced generalized Langevin ensemble
    SimGle(Common),
    /// Reduced Langevin ensemble
    SimLangevin(Common),
    /// Finite lattice bath with the system, and the equivalent GLE path
    SimBath(Common),
    /// Generalized Langevin versus Langevin at one mass ratio
    Compare(Common),
    /// Final-time position histograms over the mass-ratio sweep
    ReproduceFig1(Common),
    /// Final-time momentum histograms over the mass-ratio sweep
    ReproduceFig2(Common),
    /// Position autocorrelations over the mass-ratio sweep
    ReproduceFig3(Common),
    /// Momentum autocorrelations over the mass-ratio sweep
    ReproduceFig4(Common),
    /// Check a configuration file and list every problem found
    Validate {
        /// Configuration file
        path: PathBuf,
    },
}

fn load(common: &Common, kind: Kind) -> Result<Config, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let (cfg, diags) =
                Config::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if !diags.is_empty() {
                let lines: Vec<String> = diags.iter().map(|d| format!("  {d}")).collect();
                return Err(CliError::Config(format!("{}:\n{}", path.display(), lines.join("\n"))));
            }
            cfg
        }
        None => Config::default(),
    };
    cfg.kind = Some(kind);
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = out.clone();
    }
    if let Some(paths) = common.paths {
        cfg.paths = paths;
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    let diags = cfg.check();
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| format!("  {d}")).collect();
        return Err(CliError::Config(lines.join("\n")));
    }
    Ok(cfg)
}

fn validate(path: &PathBuf) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (_, diags) = Config::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if diags.is_empty() {
        println!("{}: ok", path.display());
        return Ok(());
    }
    for d in &diags {
        println!("{}: {d}", path.display());
    }
    Err(CliError::Config(format!("{} problem(s) found", diags.len())))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, kind) = match &cli.command {
        Command::Validate { path } => return validate(path),
        Command::KernelEval(c) => (c, Kind::KernelEval),
        Command::Kappa(c) => (c, Kind::Kappa),
        Command::NoiseSample(c) => (c, Kind::NoiseSample),
        Command::SimGle(c) => (c, Kind::SimGle),
        Command::SimLangevin(c) => (c, Kind::SimLangevin),
        Command::SimBath(c) => (c, Kind::SimBath),
        Command::Compare(c) => (c, Kind::Compare),
        Command::ReproduceFig1(c) => (c, Kind::Fig(1)),
        Command::ReproduceFig2(c) => (c, Kind::Fig(2)),
        Command::ReproduceFig3(c) => (c, Kind::Fig(3)),
        Command::ReproduceFig4(c) => (c, Kind::Fig(4)),
    };
    let cfg = load(common, kind)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError::Config(format!("run.threads: {e}")))?;
    }
    commands::run(&cfg, common.timestamp)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
