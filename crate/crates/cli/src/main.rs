//! `exactfp`: fingerprint dumps, collision studies, GP regression trials and
//! Bayesian optimization runs over SMILES tables.
//!
//! Exit codes: 0 success, 2 usage error, 3 input/output error, 4 numerical
//! failure.

mod commands;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "exactfp", version, about = "Exact and compressed count fingerprints for Tanimoto GP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one fingerprint line per molecule (`id:count` pairs, ascending).
    Fingerprint(FingerprintArgs),
    /// Fit a Sort&Slice vocabulary on a SMILES table.
    FitVocab(FitVocabArgs),
    /// Compare exact and folded Tanimoto similarity over random molecule pairs.
    Collisions(CollisionsArgs),
    /// Seeded GP regression trials with R², MSE and MAE on a test set.
    Regress(RegressArgs),
    /// Seeded Bayesian optimization trajectories over a candidate pool.
    Bo(BoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HyperMode {
    /// Amplitude = var(y), noise = 0.01 var(y), mean = mean(y).
    Fixed,
    /// Start from the fixed values and maximize the marginal likelihood.
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionArg {
    Min,
    Max,
}

impl From<DirectionArg> for exactfp::Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Min => exactfp::Direction::Minimize,
            DirectionArg::Max => exactfp::Direction::Maximize,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FingerprintArgs {
    /// SMILES table (tab or comma separated, with a `smiles` column).
    #[arg(long)]
    pub input: PathBuf,
    /// exact, folded:<dim> or sortslice:<vocab file>.
    #[arg(long, default_value = "exact")]
    pub encoding: String,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitVocabArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of vocabulary slots.
    #[arg(long, default_value_t = 1024)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CollisionsArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated fold dimensions.
    #[arg(long, value_delimiter = ',', default_value = "512,1024,2048,4096")]
    pub dims: Vec<usize>,
    /// Number of random molecule pairs.
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write one row per (pair, dim).
    #[arg(long)]
    pub per_pair: bool,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RegressArgs {
    /// Training table, or the full table when `--split` is given.
    #[arg(long)]
    pub input: PathBuf,
    /// Separate test table.
    #[arg(long, conflicts_with = "split", required_unless_present = "split")]
    pub test: Option<PathBuf>,
    /// Two-column id/label file assigning records of `--input` to train or test.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "exact")]
    pub encoding: String,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, value_enum, default_value_t = HyperMode::Fixed)]
    pub hyper: HyperMode,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Training molecules sampled per trial; capped at the training set size.
    #[arg(long, default_value_t = 10_000)]
    pub train_size: usize,
    /// Test molecules sampled per trial; all of them when omitted.
    #[arg(long)]
    pub test_size: Option<usize>,
    /// Keep the mean constant at mean(y) in optimized mode.
    #[arg(long)]
    pub fixed_mean: bool,
    #[arg(long, default_value_t = 10_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long)]
    pub output_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BoArgs {
    /// Candidate pool table with the objective column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "exact")]
    pub encoding: String,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[arg(long, value_enum, default_value_t = HyperMode::Fixed)]
    pub hyper: HyperMode,
    /// Re-optimize hyperparameters after every acquisition (slow).
    #[arg(long)]
    pub refit: bool,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 1000)]
    pub init_size: usize,
    /// Initial observations are drawn from this worst fraction of the pool.
    #[arg(long, default_value_t = 0.8)]
    pub init_fraction: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Min)]
    pub direction: DirectionArg,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Subsample the pool to this many molecules (shared by all trials).
    #[arg(long)]
    pub pool_size: Option<usize>,
    #[arg(long)]
    pub output_dir: PathBuf,
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Fingerprint(a) => commands::fingerprint::run(&a),
        Command::FitVocab(a) => commands::vocab::run(&a),
        Command::Collisions(a) => commands::collisions::run(&a),
        Command::Regress(a) => commands::regress::run(&a),
        Command::Bo(a) => commands::bo::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exactfp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
