//! `rwguide`: random-boundary waveguide tools.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::Ctx;
use config::{Format, RunConfig};
use output::{config_hash, header, Sink};
use std::path::PathBuf;
use std::process::ExitCode;

/// Coupled-mode propagation in waveguides with random boundaries.
#[derive(Debug, Parser)]
#[command(name = "rwguide", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for ensemble runs.
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,
    /// Table format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Run ensembles even when backscattering is not negligible.
    #[arg(long, global = true)]
    override_forward_check: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Propagating mode table.
    Modes,
    /// Coupling coefficient tables and their symmetry identities.
    Coupling,
    /// Generator matrices of the diffusion limit.
    Gamma,
    /// Phase coefficients from the ν, μ cross terms and evanescent modes.
    Kappa,
    /// Mean mode powers and mean amplitudes.
    Moments,
    /// Fourth moments of the amplitudes.
    Fourth,
    /// Attenuation, exchange and equipartition lengths.
    Lengthscales,
    /// Exact generator diagonals against their high-frequency forms.
    Estimates,
    /// Interior-fluctuation length scales against boundary ones.
    InteriorCompare,
    /// Monte Carlo ensemble of coupled-mode integrations.
    Simulate,
    /// Ensemble moments against the diffusion limit.
    Compare,
}

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
    Comparison,
}

impl From<rwguide::Error> for Failure {
    fn from(e: rwguide::Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let Some(path) = &cli.config else {
        return Err(Failure::Validation("--config is required".into()));
    };
    let bytes = std::fs::read(path).map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| Failure::Validation("config is not UTF-8".into()))?;
    let cfg = RunConfig::parse(text)?;
    let dir = cli.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let format = cli.format.or(cfg.output.format).unwrap_or_default();
    let sink = Sink::new(&dir, format, header(&config_hash(&bytes), cfg.seed()))?;
    let ctx = Ctx { cfg: &cfg, sink, workers: cli.workers, override_forward: cli.override_forward_check };
    match cli.command {
        Command::Modes => commands::modes(&ctx),
        Command::Coupling => commands::coupling(&ctx),
        Command::Gamma => commands::gamma(&ctx),
        Command::Kappa => commands::kappa_cmd(&ctx),
        Command::Moments => commands::moments(&ctx),
        Command::Fourth => commands::fourth(&ctx),
        Command::Lengthscales => commands::lengthscales(&ctx),
        Command::Estimates => commands::estimates(&ctx),
        Command::InteriorCompare => commands::interior(&ctx),
        Command::Simulate => commands::simulate(&ctx),
        Command::Compare => {
            if commands::compare(&ctx)? {
                Ok(())
            } else {
                Err(Failure::Comparison)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Comparison) => {
            eprintln!("comparison failed");
            ExitCode::from(4)
        }
    }
}
