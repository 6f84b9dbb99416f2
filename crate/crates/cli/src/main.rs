use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ionmix_cli::commands::{self, Report, PARITY_FILE, POPULATIONS_FILE, SUMMARY_FILE};
use ionmix_cli::config::{self, Format, RunConfig};
use ionmix_cli::render::use_color;

/// Normal modes, sideband couplings, Molmer-Sorensen gate simulations and
/// error budgets for mixed-species ion crystals.
///
/// All frequencies in configuration files are ordinary frequencies in Hz.
#[derive(Parser)]
#[command(name = "ionmix", version)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration field, e.g. `--set gate.gate_time_us=71`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set output.format=...`.
    #[arg(long, global = true, value_parser = ["table", "csv", "json"])]
    format: Option<String>,
    /// Shorthand for `--set output.path=...`.
    #[arg(long, global = true)]
    output: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Modes and Lamb-Dicke parameters of the configured crystal.
    Modes,
    /// Mode table for all pairs and layouts from the species pool.
    Table {
        /// Append the nearest-sideband margins and rank configurations by them.
        #[arg(long)]
        rank_gaps: bool,
    },
    /// Simulate the configured gate; writes populations, parity and summary.
    Gate,
    /// Second-order in-phase sideband error of an out-of-phase gate.
    Budget,
    /// Rank gate modes and gate times for the configured crystal.
    Scan,
    /// Nearly degenerate sideband pairs of the configured crystal.
    Degeneracies,
}

fn emit(report: &Report, config: &RunConfig) -> Result<()> {
    let body = match config.output.format {
        Format::Table => report.text(config.output.path.is_none() && use_color()),
        Format::Csv => report.csv.to_csv()?,
        Format::Json => serde_json::to_string_pretty(&report.json)? + "\n",
    };
    match &config.output.path {
        Some(p) => fs::write(p, body).with_context(|| format!("writing {p}")),
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut overrides = cli.overrides;
    if let Some(f) = cli.format {
        overrides.push(format!("output.format={f}"));
    }
    if let Some(o) = cli.output {
        overrides.push(format!("output.path={}", serde_json::to_string(&o)?));
    }
    let config = config::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Modes => emit(&commands::modes(&config)?, &config),
        Command::Table { rank_gaps } => emit(&commands::table(&config, rank_gaps)?, &config),
        Command::Budget => emit(&commands::budget(&config)?, &config),
        Command::Scan => emit(&commands::scan(&config)?, &config),
        Command::Degeneracies => emit(&commands::degeneracies(&config)?, &config),
        Command::Gate => {
            let out = commands::gate(&config)?;
            let dir = Path::new(config.output.path.as_deref().unwrap_or("."));
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            fs::write(dir.join(POPULATIONS_FILE), &out.populations_csv)?;
            fs::write(dir.join(PARITY_FILE), &out.parity_csv)?;
            fs::write(
                dir.join(SUMMARY_FILE),
                serde_json::to_string_pretty(&out.summary)? + "\n",
            )?;
            println!(
                "fidelity {:.6}  contrast {:.6}  P1bright(t_g) {:.3e}  -> {}",
                out.result.fidelity,
                out.result.contrast,
                out.result.final_populations.p1bright,
                dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ionmix_cli::exit_code(&e) as u8)
        }
    }
}
