//! `critpoints`: expected critical-point counts of random holomorphic
//! sections, from Wishart statistics and from direct simulation.

mod args;
mod direct;
mod estimate;
mod mp;
mod output;
mod svg;
mod verify;
mod wishart;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "critpoints", version, about, propagate_version = true)]
struct Cli {
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "CRITPOINTS_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Marchenko-Pastur law: density, CDF, quantiles and the rate function.
    Mp(mp::MpArgs),
    /// Sample spectra of the Wishart ensemble.
    Wishart(wishart::WishartArgs),
    /// Expected counts and growth rates from Wishart statistics.
    Estimate(estimate::EstimateArgs),
    /// Direct counts from sampled sections (m <= 3).
    Direct(direct::DirectArgs),
    /// Run the verification checks.
    Verify(verify::VerifyArgs),
}

/// The seed to use: the given one, or the default outside CI. Under CI
/// (the `CI` variable set to anything but `0`/`false`) a seed is required.
pub fn resolve_seed(seed: Option<u64>, default: u64) -> Result<u64> {
    match seed {
        Some(s) => Ok(s),
        None if in_ci() => bail!("--seed is required when CI is set"),
        None => Ok(default),
    }
}

fn in_ci() -> bool {
    std::env::var("CI").map(|v| !v.is_empty() && v != "0" && !v.eq_ignore_ascii_case("false")).unwrap_or(false)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Mp(a) => mp::run(a),
        Command::Wishart(a) => wishart::run(a),
        Command::Estimate(a) => estimate::run(a),
        Command::Direct(a) => direct::run(a),
        Command::Verify(a) => verify::run(a),
    }
}

/// Output piped into e.g. `head` that closed early.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
