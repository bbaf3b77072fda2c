//! Command-line front end for the Gaussian sketch estimator toolkit.
//!
//! Exit codes: 0 success, 2 invalid input, 3 size guard refusal,
//! 4 validation failure. Reports never depend on the thread count.

mod commands;
mod manifest;
mod output;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cmd_bounds, cmd_estimate, cmd_variance, BoundsArgs, EstimateArgs, VarianceArgs};
use output::Format;
use validate::{cmd_validate, ValidateArgs};

#[derive(Parser)]
#[command(
    name = "schatten",
    version,
    about = "Gaussian sketch estimation of Schatten norms: estimates, exact variances, bounds, and a cross-check suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; falls back to SCHATTEN_THREADS, then all cores.
    /// The setting affects speed only, never report bytes.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate Tr(S^p) from Gaussian sketches of a matrix or spectrum.
    Estimate(EstimateArgs),
    /// Exact estimator variance through one of several routes.
    Variance(VarianceArgs),
    /// Variance bounds for one configuration or a parameter sweep.
    Bounds(BoundsArgs),
    /// Cross-check suite; reports documented formula defects as ERRATA.
    Validate(ValidateArgs),
}

fn init_threads(flag: Option<usize>) {
    let requested = flag.or_else(|| {
        std::env::var("SCHATTEN_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = requested {
        // Ignore AlreadyInitialized: the pool size changes speed only.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    let outcome = match &cli.command {
        Command::Estimate(args) => cmd_estimate(args, cli.format).map(|s| (s, true)),
        Command::Variance(args) => cmd_variance(args, cli.format).map(|s| (s, true)),
        Command::Bounds(args) => cmd_bounds(args, cli.format).map(|s| (s, true)),
        Command::Validate(args) => cmd_validate(args, cli.format),
    };
    match outcome {
        Ok((rendered, passed)) => {
            print!("{rendered}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
