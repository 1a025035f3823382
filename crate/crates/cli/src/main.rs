//! `uot` — batch harness for the creative pipelines: run methods against a
//! task, score external solutions, sweep parameters, verify stored runs,
//! and tabulate search-space gains.

mod commands;
mod config;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{AppConfig, BackendKind};

#[derive(Parser)]
#[command(name = "uot", version, about = "Creative-pipeline harness")]
struct Cli {
    /// JSON config file; built-in defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Backend override.
    #[arg(long, global = true, value_enum, value_name = "KIND")]
    backend: Option<BackendKind>,
    /// Fixture file override for the scripted backend.
    #[arg(long, global = true, value_name = "PATH")]
    fixtures: Option<PathBuf>,
    /// Pipeline parameter override as NAME=VALUE; repeatable.
    #[arg(long = "seed-params", global = true, value_name = "NAME=VALUE")]
    seed_params: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a method several times, persist each run, and print the
    /// aggregate metrics.
    Run {
        /// One of: cuot, euot, tuot, zero_shot, cot.
        method: String,
        /// Task spec file.
        task: PathBuf,
        /// Override the configured number of runs.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Score a JSON file of solution texts against a task.
    Evaluate {
        /// JSON array of solution strings or `{id, text}` objects.
        solutions: PathBuf,
        /// Task spec file.
        task: PathBuf,
    },
    /// Re-run a method across parameter values and tabulate the metrics.
    Sweep {
        /// One of: cuot, euot, tuot, zero_shot, cot.
        method: String,
        /// Task spec file.
        task: PathBuf,
        /// Parameter to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values the parameter takes.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Runs per value.
        #[arg(long, default_value_t = 1)]
        reps: usize,
    },
    /// Verify a stored run record against its own transcript digests.
    Replay {
        /// Id of a persisted run.
        run_id: String,
    },
    /// Tabulate search-space gains over a parameter grid.
    Complexity(commands::ComplexityArgs),
    /// Response-cache maintenance.
    Cache {
        #[command(subcommand)]
        op: CacheOp,
    },
}

#[derive(Subcommand)]
enum CacheOp {
    /// Drop every entry from the persistent response cache.
    Clear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut config = AppConfig::load(cli.config.as_deref())?;
    if let Some(backend) = cli.backend {
        config.backend = backend;
    }
    if let Some(fixtures) = cli.fixtures {
        config.fixtures = Some(fixtures);
    }
    for pair in &cli.seed_params {
        config.apply_override(pair)?;
    }
    match cli.command {
        Command::Run { method, task, runs } => commands::cmd_run(&config, &method, &task, runs),
        Command::Evaluate { solutions, task } => {
            commands::cmd_evaluate(&config, &solutions, &task)
        }
        Command::Sweep {
            method,
            task,
            param,
            values,
            reps,
        } => commands::cmd_sweep(&config, &method, &task, &param, &values, reps),
        Command::Replay { run_id } => commands::cmd_replay(&config, &run_id),
        Command::Complexity(args) => commands::cmd_complexity(&args),
        Command::Cache { op: CacheOp::Clear } => commands::cmd_cache_clear(&config),
    }
}
