//! Experiment runner for the fourth-order NLS library.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{Checked, UsageError, Verdict};
use config::ExperimentSpec;

#[derive(Parser)]
#[command(
    name = "nls4",
    version,
    about = "Simulations and multiplier checks for fourth-order NLS on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment spec; omitted sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV reports (env NLS4_OUT).
    #[arg(long, global = true, env = "NLS4_OUT", default_value = "nls4-out")]
    out: PathBuf,
    /// Cap on worker threads (env NLS4_THREADS).
    #[arg(long, global = true, env = "NLS4_THREADS")]
    threads: Option<usize>,
    /// Seed for sampled checks and random data; overrides the spec's.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate and report the conserved functionals.
    Simulate,
    /// Exact pointwise multiplier identities.
    VerifyIdentities,
    /// Phase certificates, multiplier bounds and the resonant cancellation.
    VerifyBounds,
    /// Residual of the normal-form identity under time-step refinement.
    NfResidual,
    /// Phase growth along the near-resonant family.
    CounterexampleScan,
    /// Difference quotients of the solution map.
    Continuity,
}

fn setup(cli: &Cli) -> Result<ExperimentSpec> {
    let mut spec = match &cli.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    Ok(spec)
}

fn dispatch(
    cmd: Command,
    spec: &ExperimentSpec,
    out: &std::path::Path,
) -> Checked<Result<Verdict>> {
    match cmd {
        Command::Simulate => commands::simulate(spec, out),
        Command::VerifyIdentities => commands::verify_identities(spec, out),
        Command::VerifyBounds => commands::verify_bounds(spec, out),
        Command::NfResidual => commands::nf_residual(spec, out),
        Command::CounterexampleScan => commands::counterexample_scan(spec, out),
        Command::Continuity => commands::continuity(spec, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match setup(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("usage error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match dispatch(cli.command, &spec, &cli.out) {
        Err(UsageError(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Ok(Err(e)) => {
            eprintln!("FAIL: {e:#}");
            ExitCode::from(1)
        }
        Ok(Ok(Verdict::Fail(msg))) => {
            println!("FAIL: {msg}");
            ExitCode::from(1)
        }
        Ok(Ok(Verdict::Pass(msg))) => {
            println!("PASS: {msg}");
            ExitCode::SUCCESS
        }
    }
}
