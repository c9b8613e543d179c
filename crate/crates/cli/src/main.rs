//! `hdinfer` command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{render_keys, BOUND_KEYS, DATASET_KEYS, ESTIMATE_KEYS, GGM_KEYS, NODEWISE_KEYS};

#[derive(Debug, Parser)]
#[command(name = "hdinfer", version, about = "De-sparsified inference, efficiency bounds and Monte Carlo checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output file (a directory for `dataset`); standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override a config key after parsing, e.g. `--set solver.tol=1e-10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads: 0 = all cores, 1 = sequential.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    /// Also write one CSV row per replicate.
    #[arg(long, value_name = "PATH")]
    records_csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// De-sparsified Lasso estimate and interval for a linear functional.
    #[command(after_help = render_keys(ESTIMATE_KEYS))]
    Estimate(Common),
    /// Nodewise surrogate inverse with per-column certificates.
    #[command(after_help = render_keys(NODEWISE_KEYS))]
    Nodewise(Common),
    /// De-sparsified precision matrix and an entry interval.
    #[command(after_help = render_keys(GGM_KEYS))]
    Ggm(Common),
    /// Efficiency-bound calculators.
    #[command(after_help = render_keys(BOUND_KEYS))]
    Bound(Common),
    /// Monte Carlo experiment; writes a JSON report.
    #[command(after_help = render_keys(hdinfer::sim::CONFIG_KEYS))]
    Experiment(ExperimentArgs),
    /// Export a synthetic linear-model dataset as CSV files.
    #[command(after_help = render_keys(DATASET_KEYS))]
    Dataset(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Estimate(c) => commands::estimate(c),
        Command::Nodewise(c) => commands::nodewise(c),
        Command::Ggm(c) => commands::ggm(c),
        Command::Bound(c) => commands::bound(c),
        Command::Experiment(a) => commands::experiment(&a.common, a.records_csv.as_deref()),
        Command::Dataset(c) => commands::dataset(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
