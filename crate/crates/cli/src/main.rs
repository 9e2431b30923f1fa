//! Command-line driver for the freestream verification suites and sweeps.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage
//! or configuration errors.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "freestream",
    version,
    about = "Free-streaming resolvent verification suites and sweeps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration file; every field is optional.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true, value_name = "R")]
    q: Option<f64>,

    #[arg(long = "alpha-min", global = true, value_name = "R")]
    alpha_min: Option<f64>,

    #[arg(long = "alpha-max", global = true, value_name = "R")]
    alpha_max: Option<f64>,

    /// Number of α values in the sweep.
    #[arg(long, global = true, value_name = "N")]
    points: Option<usize>,

    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Run the identity and invariant checks and write verify_report.json.
    Verify,
    /// Sweep α and fit the blow-up rate; writes sweep.csv and sweep_verdict.json.
    Sweep,
    /// Tabulate σ(θ) and ∫_ε¹σ; writes sigma_profile.csv, sigma_integral.csv and sigma_verdict.json.
    ProfileSigma,
    /// Tabulate (1+|ξ|)/|ξ₁| as ξ₁ → 0; writes gap.csv and gap_verdict.json.
    GapDemo,
}

/// A usage or configuration problem (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Parameter errors from the library are configuration errors; everything
/// else is a numerical failure.
pub fn usage(e: freestream::Error) -> anyhow::Error {
    match e {
        freestream::Error::InvalidParameter { .. } | freestream::Error::DegenerateFit { .. } => {
            UsageError(e.to_string()).into()
        }
        other => other.into(),
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, UsageError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.q {
        cfg.q = v;
    }
    if let Some(v) = cli.alpha_min {
        cfg.alpha_min = v;
    }
    if let Some(v) = cli.alpha_max {
        cfg.alpha_max = v;
    }
    if let Some(v) = cli.points {
        cfg.n_points = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let cfg = resolve_config(cli)?;
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| UsageError(format!("cannot create output directory {}: {e}", cli.out.display())))?;
    match cli.command {
        Command::Verify => commands::verify(&cfg, &cli.out),
        Command::Sweep => commands::sweep(&cfg, &cli.out),
        Command::ProfileSigma => commands::profile_sigma(&cfg, &cli.out),
        Command::GapDemo => commands::gap_demo(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
