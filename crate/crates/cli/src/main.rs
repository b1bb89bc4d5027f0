use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wsnsim_core::experiment::{parse_config, run_experiment, simulate, ExperimentSpec};
use wsnsim_core::{Execution, SimError};

/// Lifetime simulator for wireless sensor networks under topology control.
#[derive(Debug, Parser)]
#[command(name = "wsnsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured (tc, tm) pair once and write its series CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (defaults to the config's output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Deployment seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every tc_list × tm_list × seeds combination.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Run combinations one at a time.
        #[arg(long)]
        sequential: bool,
    },
    /// Only check the configuration.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentSpec, SimError> {
    parse_config(path)
}

fn execute(cli: Cli) -> Result<(), SimError> {
    match cli.command {
        Command::Validate { config } => {
            let spec = load(&config)?;
            println!(
                "{}: ok ({} run(s), {} nodes, {}x{} m)",
                config.display(),
                spec.combinations().len(),
                spec.base.deployment.node_count,
                spec.base.deployment.area.width,
                spec.base.deployment.area.height
            );
        }
        Command::Simulate { config, out, seed } => {
            let spec = load(&config)?;
            let out = out.unwrap_or_else(|| spec.output_dir.clone());
            let (row, path) = simulate(&spec, seed, &out)?;
            println!("series: {}", path.display());
            println!(
                "{} seed {}: steps {}, first death {}, <10% reachable at {}, comm {} sensing {}",
                row.label(),
                row.seed,
                row.steps,
                row.time_to_first_death,
                row.time_to_10pct_reachability,
                row.integrated_comm_coverage,
                row.integrated_sensing_coverage
            );
        }
        Command::Sweep { config, sequential } => {
            let spec = load(&config)?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            };
            let output = run_experiment(&spec, exec)?;
            println!(
                "{} series files, summary {}, ranking {}",
                output.series_files.len(),
                output.summary_file.display(),
                output.ranking_file.display()
            );
            if let Some(e) = output
                .ranking
                .iter()
                .find(|e| e.tc.to_string() == "A3" && e.tm.to_string() == "DGETRec")
            {
                println!("A3+DGETRec rank: {} of {}", e.rank, output.ranking.len());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_validation() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
