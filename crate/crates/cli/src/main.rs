//! `flexure`: command-line front end for time-periodic beam solutions.
//!
//! Exit status is 0 on success, 2 when the mathematics of the run fails (uncertified
//! parameters, divergence, resonance) and 1 for usage or configuration errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, Parser, Subcommand};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (target ",
    env!("FLEXURE_BUILD_TARGET"),
    ", profile ",
    env!("FLEXURE_BUILD_PROFILE"),
    ")"
);

#[derive(Debug, Parser)]
#[command(name = "flexure", version = VERSION, about = "Time-periodic solutions of forced variable-coefficient beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; each overrides the matching config key.
#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for CSV reports.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of grid subintervals of [0, π].
    #[arg(long = "n-x")]
    n_x: Option<usize>,
    /// Number of beam modes J.
    #[arg(long = "J")]
    j: Option<usize>,
    /// Built-in forcing model: linear_forcing, affine, quadratic or cubic.
    #[arg(long)]
    model: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lowest eigenpairs of the beam operator.
    Eig {
        #[command(flatten)]
        common: Common,
    },
    /// Newton solve of the time-mean equation at w = 0.
    Qsolve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Divisor diagnostics and direct versus preconditioned inversion of the linearized operator.
    LinopCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        /// Time truncation.
        #[arg(long = "N")]
        n: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Nash–Moser solve and certification at one (ε, ω).
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long = "N0")]
        n0: Option<usize>,
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
    },
    /// Solves over a rectangular (ε, ω) grid in parallel (workers from FLEXURE_WORKERS).
    Sweep {
        #[command(flatten)]
        common: Common,
        /// ε bounds as a,b.
        #[arg(long = "epsilon-range", value_parser = parse_pair)]
        epsilon_range: (f64, f64),
        #[arg(long = "epsilon-steps", default_value_t = 3)]
        epsilon_steps: usize,
        /// ω bounds as a,b.
        #[arg(long = "omega-range", value_parser = parse_pair)]
        omega_range: (f64, f64),
        #[arg(long = "omega-steps", default_value_t = 3)]
        omega_steps: usize,
    },
    /// Measure of the non-resonant frequency set in an ω interval.
    Sieve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
        /// ω interval as a,b.
        #[arg(long = "omega-range", value_parser = parse_pair)]
        omega_range: Option<(f64, f64)>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Also evaluate γ/2 and γ/4 and fit the deficit against γ.
        #[arg(long = "gamma-ladder")]
        gamma_ladder: bool,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected a,b but got {s:?}"))?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) { 0 } else { 1 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let domain = e.downcast_ref::<flexure::Error>().is_some_and(|d| d.is_domain_error());
            ExitCode::from(if domain { 2 } else { 1 })
        }
    }
}
