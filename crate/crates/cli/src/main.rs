//! `rumboost` command-line tool.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure.

mod artifacts;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::artifacts::Failure;

#[derive(Debug, Parser)]
#[command(name = "rumboost", version, about = "Gradient-boosted random utility models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model, optionally with cross-validation or a search over the nest scale.
    Train(TrainArgs),
    /// Report the mean cross-entropy of a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Replace step utilities with monotone splines chosen by BIC.
    Smooth(SmoothArgs),
    /// Export utility curves, value-of-time surfaces and histograms.
    Indicators(IndicatorArgs),
    /// Retrain on bootstrap resamples and export curve bands.
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Delimited choice table.
    #[arg(long)]
    data: PathBuf,
    /// Column roles (TOML). Without it the table must have `choice` (and
    /// optionally `group`) columns holding alternative indices.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Grouping column for folds and holdouts, overriding the schema.
    #[arg(long)]
    group: Option<String>,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// Training parameters (TOML); flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum boosting rounds.
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Early-stopping patience in rounds; 0 disables it.
    #[arg(long = "early-stop")]
    early_stop: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Model specification (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    params: ParamArgs,
    /// Validation table for early stopping (same layout as --data).
    #[arg(long)]
    valid: Option<PathBuf>,
    /// Grouped K-fold cross-validation; the final model uses the mean best round.
    #[arg(long)]
    cv: Option<usize>,
    /// Nest structure, e.g. "walk;cycle;pt,drive".
    #[arg(long)]
    nested: Option<String>,
    /// Scale of the multi-alternative nests.
    #[arg(long)]
    mu: Option<f64>,
    /// Search the nest scale over LO:HI:STEP by validation loss.
    #[arg(long = "mu-grid")]
    mu_grid: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct SmoothArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated ALT:VARIABLE list, or "all" for every one-variable parameter.
    #[arg(long = "smooth-targets")]
    smooth_targets: Option<String>,
    /// Knots per curve as LO:HI.
    #[arg(long = "knot-bounds", default_value = "3:8")]
    knot_bounds: String,
    #[arg(long, default_value_t = 25)]
    searches: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Count knot positions as free parameters in the BIC.
    #[arg(long = "df-positions")]
    df_positions: bool,
}

#[derive(Debug, Args)]
struct IndicatorArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Dataset for population values of time and individual constants.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Value-of-time pair ALT:TIME:COST; repeatable.
    #[arg(long)]
    vot: Vec<String>,
    /// Grid points per axis for surfaces and contours.
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Multiplier on the time/cost ratio, e.g. 60 for minutes to hours.
    #[arg(long = "time-scale", default_value_t = 1.0)]
    time_scale: f64,
    /// Histogram bins.
    #[arg(long, default_value_t = 50)]
    bins: usize,
}

#[derive(Debug, Args)]
struct BootstrapArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Number of resamples.
    #[arg(long, default_value_t = 100)]
    bootstrap: usize,
    #[command(flatten)]
    params: ParamArgs,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RUMBOOST_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("RUMBOOST_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(format!("cannot size the thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Smooth(a) => commands::smooth(a),
        Command::Indicators(a) => commands::indicators(a),
        Command::Bootstrap(a) => commands::bootstrap(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
