//! `biphoton`: simulate dispersion-broadened coincidence histograms and fit
//! the fibre dispersion back out of them.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use biphoton::fitting::FreeParameter;
use biphoton::scenario::{self, presets};
use biphoton::units::{parse_quantity, Dimension};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "biphoton", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its curves, histogram and summary.
    Simulate {
        /// Scenario file, or the name of a built-in preset.
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `mca.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a histogram CSV against a scenario; exits 2 if the fit does not converge.
    Fit {
        config: PathBuf,
        histogram: PathBuf,
        /// Lower bound of the free parameter (e.g. `1e-23` or `1e-23 s2`).
        #[arg(long, allow_hyphen_values = true)]
        lo: String,
        #[arg(long, allow_hyphen_values = true)]
        hi: String,
        #[arg(long, value_enum, default_value_t = Free::TotalB)]
        free: Free,
    },
    /// Built-in scenarios.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    /// Print a preset's scenario file.
    Show {
        name: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Free {
    /// Total dispersion budget in s².
    TotalB,
    /// Type-I crystal D″ in s²/m, fibre k″ fixed.
    D2,
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = scenario::load_config(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(seed) = seed {
                cfg.mca.rng_seed = seed;
            }
            let summary = scenario::run_scenario(&cfg, &out)?;
            print!("{}", summary.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            config,
            histogram,
            lo,
            hi,
            free,
        } => {
            let cfg = scenario::load_config(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let (free, dim) = match free {
                Free::TotalB => (FreeParameter::TotalB, Dimension::TimeSquared),
                Free::D2 => (FreeParameter::D2crystal, Dimension::Dispersion),
            };
            let lo = parse_quantity(&lo, dim).context("--lo")?;
            let hi = parse_quantity(&hi, dim).context("--hi")?;
            let outcome = scenario::run_fit(&cfg, &histogram, (lo, hi), free)?;
            print!("{}", outcome.report);
            Ok(if outcome.result.converged {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Presets { action } => {
            match action {
                PresetAction::List => {
                    for name in presets::names() {
                        println!("{name}\t{}", presets::description(name).unwrap_or(""));
                    }
                }
                PresetAction::Show { name } => {
                    let text = presets::text(&name)
                        .with_context(|| format!("no preset named `{name}`"))?;
                    print!("{text}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
