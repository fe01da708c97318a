mod commands;
mod construction;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Malformed invocation detected after argument parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "cyclotower", version, about = "Random cyclic-shift towers and their correlation decay")]
struct Cli {
    /// Log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build w_N and write it with the resolved parameters.
    Generate(commands::GenerateArgs),
    /// Cyclic correlations RC_n(t), or orbit averages R_f(k).
    Correlate(commands::CorrelateArgs),
    /// Monte Carlo moments of random correlations.
    Montecarlo(commands::MonteCarloArgs),
    /// Fit the envelope decay exponent of |R(t)|.
    Kappa(commands::KappaArgs),
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<cyclotower_core::Error>() {
            return if e.is_resource() { EXIT_RUNTIME } else { EXIT_VALIDATION };
        }
        if cause.is::<Usage>() || cause.is::<serde_json::Error>() || cause.is::<csv::Error>() {
            return EXIT_VALIDATION;
        }
        if cause.is::<std::io::Error>() {
            return EXIT_RUNTIME;
        }
    }
    EXIT_RUNTIME
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Correlate(args) => commands::correlate(args),
        Command::Montecarlo(args) => commands::montecarlo(args),
        Command::Kappa(args) => commands::kappa(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
