//! Experiment runner: configuration-driven simulation, analytic tables,
//! exact-enumeration oracles, and MC-vs-analytic verification.
//!
//! Exit codes: 0 success (all verification rows pass), 1 verification
//! failure, 2 configuration or I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Result, bail};
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod predict;

use config::{ExperimentConfig, ScaleSchedule};
use wishart_gff::rng_ensemble::EntryDistribution;

#[derive(Parser)]
#[command(
    name = "wishart-gff",
    about = "Covariance of linear eigenvalue statistics of overlapping sample covariance matrices",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write moment reports.
    Simulate(RunArgs),
    /// Evaluate limiting covariances, tree polynomials, and chart checks.
    Analytic(RunArgs),
    /// Exact small-size enumeration of trace moments and covariances.
    Oracle(RunArgs),
    /// Compare Monte Carlo against analytic (and optionally exact) values.
    Verify(VerifyArgs),
    /// Pretty-print a previously written JSON output file.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment TOML config.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    batches: Option<usize>,
    /// Replace the scale schedule by a single scale.
    #[arg(long)]
    scale: Option<usize>,
    /// Entry law: real_gaussian, complex_gaussian, rademacher, uniform_sym.
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    run: RunArgs,
    /// |z| threshold for a row to pass.
    #[arg(long)]
    threshold: Option<f64>,
    /// Shift every analytic prediction (harness negative-control hook).
    #[arg(long, hide = true)]
    nudge_analytic: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// Path to a JSON file written by simulate or verify.
    path: PathBuf,
}

fn parse_distribution(name: &str) -> Result<EntryDistribution> {
    Ok(match name {
        "real_gaussian" => EntryDistribution::RealGaussian,
        "complex_gaussian" => EntryDistribution::ComplexGaussian,
        "rademacher" => EntryDistribution::Rademacher,
        "uniform_sym" => EntryDistribution::UniformSym,
        other => bail!(
            "unknown distribution {other:?}; use real_gaussian, complex_gaussian, rademacher, or uniform_sym"
        ),
    })
}

fn load_with_overrides(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.run.seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.run.replicates = r;
    }
    if let Some(b) = args.batches {
        cfg.run.batches = b;
    }
    if let Some(l) = args.scale {
        cfg.run.scale = ScaleSchedule::One(l);
    }
    if let Some(d) = &args.distribution {
        cfg.run.distribution = parse_distribution(d)?;
    }
    if let Some(dir) = &args.output_dir {
        match &mut cfg.output {
            Some(out) => out.dir = dir.clone(),
            None => {
                cfg.output = Some(config::OutputSection {
                    dir: dir.clone(),
                    json: None,
                    csv: None,
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var("WISHART_GFF_WORKERS") {
        let n: usize = v.parse().map_err(|_| {
            anyhow::anyhow!("WISHART_GFF_WORKERS must be a positive integer, got {v:?}")
        })?;
        if n == 0 {
            bail!("WISHART_GFF_WORKERS must be a positive integer, got 0");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    Ok(())
}

fn run() -> Result<u8> {
    init_workers()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => {
            let cfg = load_with_overrides(&args)?;
            commands::simulate(&cfg)
        }
        Command::Analytic(args) => {
            let cfg = load_with_overrides(&args)?;
            commands::analytic(&cfg)
        }
        Command::Oracle(args) => {
            let cfg = load_with_overrides(&args)?;
            commands::oracle(&cfg)
        }
        Command::Verify(args) => {
            let mut cfg = load_with_overrides(&args.run)?;
            if let Some(t) = args.threshold {
                if !(t >= 0.0 && t.is_finite()) {
                    bail!("threshold must be >= 0, got {t}");
                }
                let v = cfg.verify.get_or_insert_with(Default::default);
                v.threshold = Some(t);
            }
            commands::verify(&cfg, args.nudge_analytic.unwrap_or(0.0))
        }
        Command::Report(args) => commands::report(&args.path),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
