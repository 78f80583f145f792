//! Batch front-end for the passive-bounds library.
//!
//! Subcommands read a single TOML config, run the requested checks, and
//! write a JSON report (always) plus CSV curves into the output directory.
//! Exit code 0 means every check passed, 1 means at least one check failed
//! (the report is still written), 2 means a configuration or I/O problem.

mod commands;
mod config;
mod output;

use anyhow::Context;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "passive-bounds",
    version,
    about = "Sum-rule and band-inequality checks for passive linear responses"
)]
struct Cli {
    /// Output directory for report.json and CSV curves.
    #[arg(long, global = true, default_value = "pb-out")]
    out: PathBuf,

    /// Worker threads for parallel sweeps (0 = auto).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Pass tolerance applied to bound slacks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify passivity and conjugate symmetry of a dispersion model.
    PassivityCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the measure-composed sum rule over a band.
    SumRule {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run transparency, level-set, max and Kramers-Kronig checks.
    BoundCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Design a coated-sphere cloak frequency and test the envelope bound.
    CloakDemo {
        #[arg(long)]
        config: PathBuf,
    },
    /// Assemble polarizability tensors for a rasterized scene.
    Polarizability {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if cli.threads > 0 {
        // A failure here only means a pool already exists (e.g. in tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let code = match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let out = output::Outputs::new(&cli.out)?;
    let load = |path: &PathBuf| -> anyhow::Result<config::RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        config::RunConfig::parse(&text)
            .with_context(|| format!("parsing config {}", path.display()))
    };
    match &cli.command {
        Command::PassivityCheck { config } => {
            commands::passivity::run(&load(config)?, &out, cli.tol)
        }
        Command::SumRule { config } => commands::sum_rule::run(&load(config)?, &out, cli.tol),
        Command::BoundCheck { config } => commands::bound_check::run(&load(config)?, &out, cli.tol),
        Command::CloakDemo { config } => commands::cloak_demo::run(&load(config)?, &out, cli.tol),
        Command::Polarizability { config } => {
            commands::polarizability::run(&load(config)?, &out, cli.tol)
        }
    }
}
