//! `nlpi`: analyze graph families, validate switching schedules and run
//! consensus simulations from TOML scenario files.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nlpi_consensus::Model;

use commands::{EXIT_USAGE, OUTPUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "nlpi",
    version,
    about = "Nonlinear-PI consensus over switching digraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report SCCs, basis bicomponents, Laplacian rank and the joint-basis verdict.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Check a scenario's switching schedule without simulating.
    Validate { config: PathBuf },
    /// Run one or more scenarios and write CSV output and reports.
    Simulate {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        model: Option<Model>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Output directory; one subdirectory per scenario when several are given.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the resolved scenario as a self-contained config and exit.
        #[arg(long)]
        dump_config: bool,
        /// Number of scenarios to run in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Fallback output root when neither --out nor the config names one.
        #[arg(long, env = OUTPUT_ENV, hide = true)]
        default_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let code = match cli.command {
        Command::Analyze { files } => commands::analyze(&files),
        Command::Validate { config } => commands::validate(&config),
        Command::Simulate {
            configs,
            model,
            horizon,
            step,
            out,
            dump_config,
            jobs,
            default_out,
        } => {
            let opts = commands::SimulateOptions {
                model,
                horizon,
                step,
                out,
                default_out,
                jobs,
            };
            if dump_config {
                commands::dump_configs(&configs, &opts)
            } else {
                commands::simulate(&configs, &opts)
            }
        }
    };
    ExitCode::from(code)
}
