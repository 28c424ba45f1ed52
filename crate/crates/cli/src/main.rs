mod commands;
mod config;
mod errors;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use errors::{classify, render, Code};

#[derive(Debug, Parser)]
#[command(name = "airdelay", version, about = "Airport arrival-delay forecasting pipeline")]
pub struct Cli {
    /// TOML config file. Flags override its values, which override built-in defaults.
    #[arg(long, global = true, env = config::CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate emulated flight, quarter-hour and weather CSVs.
    Synth(SynthArgs),
    /// Assemble the master quarter-hour table (master.csv) from raw CSVs.
    Ingest(IngestArgs),
    /// Export traffic-density and weather grids at one instant.
    Features(FeaturesArgs),
    /// Train a model on master.csv; writes the checkpoint, normalizer and metrics.
    Train(TrainArgs),
    /// Quantile forecasts for every window of a split (forecasts.csv).
    Predict(ModelArgs),
    /// MAE of the median forecast and of the baselines, per airport and horizon.
    Evaluate(ModelArgs),
    /// Attention-by-lag profile and variable-importance rankings.
    Interpret(ModelArgs),
    /// Tidy long-format actual-vs-predicted series for plotting.
    PlotData(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of airports, taken in order from the built-in table (1-30).
    #[arg(long)]
    pub airports: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// First day, YYYY-MM-DD.
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Probability that an optional quarter-hour cell is blank.
    #[arg(long)]
    pub missing_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding flights.csv, airport_qh.csv and weather.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for master.csv and rejects.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated airport codes; defaults to those in airport_qh.csv.
    #[arg(long, value_delimiter = ',')]
    pub airports: Option<Vec<String>>,
    /// First day; defaults to the earliest quarter in airport_qh.csv.
    #[arg(long)]
    pub start: Option<NaiveDate>,
    /// Number of days; defaults to the span of airport_qh.csv.
    #[arg(long)]
    pub days: Option<usize>,
    /// Largest tolerated missing fraction per optional column.
    #[arg(long)]
    pub missing_threshold: Option<f64>,
    /// Longest gap, in quarters, filled forward.
    #[arg(long)]
    pub max_fill_gap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory holding flights.csv and weather.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// UTC instant on a quarter-hour boundary, e.g. 2016-01-05T14:00.
    #[arg(long)]
    pub at: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub master: PathBuf,
    /// Model directory to create.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub hidden_size: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Quarters between consecutive training windows.
    #[arg(long)]
    pub stride: Option<usize>,
    #[arg(long)]
    pub validation_days: Option<usize>,
    #[arg(long)]
    pub test_days: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SplitName {
    Train,
    Validation,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub master: PathBuf,
    /// Directory written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub split: SplitName,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Forecast horizon to plot, 1-based.
    #[arg(long, default_value_t = 1)]
    pub horizon: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(Code::Usage.exit_code());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[{}]: {}", Code::Usage.as_str(), first.trim_start_matches("error: "));
            return ExitCode::from(Code::Usage.exit_code());
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", render(&e));
            ExitCode::from(classify(&e).exit_code())
        }
    }
}
