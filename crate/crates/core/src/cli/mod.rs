//! Command-line front end: `ingest`, `synth`, `featurize`, `train`, `eval`,
//! `gridsearch` and `report`.
//!
//! Every flag can also come from a JSON config file passed with `--config`.
//! Top-level keys apply to any subcommand that has a flag of that name; an
//! object keyed by the subcommand name applies to that subcommand only.
//! Flags given on the command line win over the file.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or format error, 3 training
//! aborted.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::evaluate::EvalError;
use crate::features::FeatureError;
use crate::ingest::IngestError;
use crate::nn::NnError;

pub use config::{load_config, merge_args};

#[derive(Debug, Parser)]
#[command(name = "keydyn", version, about = "Free-text keystroke-dynamics authentication toolkit")]
pub struct Cli {
    /// JSON file supplying default flag values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for fold and grid-cell jobs
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse raw event logs into the canonical CSV
    Ingest(IngestArgs),
    /// Generate synthetic typing data as canonical CSV
    Synth(SynthArgs),
    /// Window canonical events and write KDI or KDS features
    Featurize(FeaturizeArgs),
    /// Cross-validate per-user verifiers and save checkpoints
    Train(TrainArgs),
    /// Score feature files with saved checkpoints
    Eval(EvalArgs),
    /// Cross-validate every cell of a hyperparameter grid
    Gridsearch(GridArgs),
    /// Summarize metrics files across users
    Report(ReportArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Featurize(_) => "featurize",
            Command::Train(_) => "train",
            Command::Eval(_) => "eval",
            Command::Gridsearch(_) => "gridsearch",
            Command::Report(_) => "report",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct IngestArgs {
    /// canonical, buffalo or clarkson [default: canonical]
    #[arg(long)]
    pub format: Option<String>,
    /// Input file or directory of files
    #[arg(long = "in")]
    #[serde(alias = "in")]
    pub input: Option<PathBuf>,
    /// Canonical CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Adapter JSON replacing the format's column map
    #[arg(long)]
    pub adapter: Option<PathBuf>,
    /// User id source for formats without a user column: stem or dir [default: stem]
    #[arg(long)]
    pub user_from: Option<String>,
    /// Ingest report path [default: <out>.report.json]
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Profile seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of users [default: 4]
    #[arg(long)]
    pub users: Option<usize>,
    /// Keystrokes per user [default: 20000]
    #[arg(long)]
    pub keystrokes: Option<usize>,
    /// Canonical CSV to write
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct FeaturizeArgs {
    /// Canonical events CSV
    #[arg(long = "in")]
    #[serde(alias = "in")]
    pub input: Option<PathBuf>,
    /// KDF file to write
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// kdi or kds [default: kdi]
    #[arg(long)]
    pub mode: Option<String>,
    /// Key encoding for kds: index or onehot [default: onehot]
    #[arg(long)]
    pub encoding: Option<String>,
    /// Keystrokes per subsequence [default: 100]
    #[arg(long)]
    pub length: Option<usize>,
    /// Users with fewer keystrokes are excluded [default: 20000]
    #[arg(long)]
    pub min_keystrokes: Option<usize>,
    /// Timing clip in milliseconds before scaling to [-1, 1] [default: 5000]
    #[arg(long)]
    pub clip_ms: Option<f64>,
}

/// Options shared by `train` and `gridsearch`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// KDF feature file
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// cnn or cnn-rnn [default: cnn]
    #[arg(long)]
    pub model: Option<String>,
    /// JSON model configuration
    #[arg(long)]
    pub model_config: Option<PathBuf>,
    /// Target users (repeatable) [default: every user in the file]
    #[arg(long)]
    pub user: Option<Vec<String>>,
    /// on or off [default: on]
    #[arg(long)]
    pub cutout: Option<String>,
    /// Cutout square side on KDI [default: 8]
    #[arg(long)]
    pub cutout_size: Option<usize>,
    /// Cutout row span on KDS [default: 10]
    #[arg(long)]
    pub cutout_span: Option<usize>,
    /// Per-sample cutout probability [default: 0.5]
    #[arg(long)]
    pub cutout_prob: Option<f64>,
    /// Recurrent cell for cnn-rnn: rnn, gru or lstm [default: gru]
    #[arg(long)]
    pub rnn: Option<String>,
    /// CNN kernel side, or CNN-RNN kernel height
    #[arg(long)]
    pub kernel: Option<usize>,
    /// Cross-validation folds [default: 5]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Mini-batch size [default: 32]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Root seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    /// Training epochs [default: 200]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Learning rate [default: 0.01 for cnn-rnn, 0.001 for cnn or a plain RNN cell]
    #[arg(long)]
    pub lr: Option<f64>,
    /// adam, sgd or sgdmomentum [default: adam]
    #[arg(long)]
    pub optimizer: Option<String>,
    /// step:<gamma> or plateau [default: step:0.1]
    #[arg(long)]
    pub schedule: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GridArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: ModelArgs,
    /// paper or quick [default: quick]
    #[arg(long)]
    pub grid: Option<String>,
    /// Cross-validation repeats per cell [default: 1]
    #[arg(long)]
    pub repeats: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// KDF feature file to score
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Checkpoint files (repeatable)
    #[arg(long)]
    pub checkpoint: Option<Vec<PathBuf>>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for negative sampling [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct ReportArgs {
    /// metrics.json files written by train (repeatable)
    #[arg(long = "in")]
    #[serde(alias = "in")]
    pub input: Option<Vec<PathBuf>>,
    /// Summary CSV [default: print only]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Training(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) | CliError::Format(_) => 2,
            CliError::Training(_) => 3,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        match e {
            IngestError::Io(_) => CliError::Io(e.to_string()),
            IngestError::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::Io(_) => CliError::Io(e.to_string()),
            FeatureError::InvalidLength(_) | FeatureError::InvalidCutout(_) => CliError::Usage(e.to_string()),
            _ => CliError::Format(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Io(_) => CliError::Io(e.to_string()),
            NnError::NonFinite { .. } => CliError::Training(e.to_string()),
            NnError::Checkpoint(_) => CliError::Format(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Io(_) => CliError::Io(e.to_string()),
            EvalError::Training { .. } => CliError::Training(e.to_string()),
            EvalError::Config(_) => CliError::Format(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Parse `args` (program name first), run, and return the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => Some(load_config(p)?),
        None => None,
    };
    let jobs = match (cli.jobs, file.as_ref().and_then(|f| f.get("jobs"))) {
        (Some(j), _) => Some(j),
        (None, Some(v)) => {
            Some(v.as_u64().ok_or_else(|| CliError::Usage("config key `jobs` must be a positive integer".into()))?
                as usize)
        }
        (None, None) => None,
    };
    if jobs == Some(0) {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let name = cli.command.name();
    let f = file.as_ref();
    let command = match cli.command {
        Command::Ingest(a) => Command::Ingest(merge_args(a, f, name)?),
        Command::Synth(a) => Command::Synth(merge_args(a, f, name)?),
        Command::Featurize(a) => Command::Featurize(merge_args(a, f, name)?),
        Command::Train(a) => Command::Train(merge_args(a, f, name)?),
        Command::Eval(a) => Command::Eval(merge_args(a, f, name)?),
        Command::Gridsearch(a) => Command::Gridsearch(merge_args(a, f, name)?),
        Command::Report(a) => Command::Report(merge_args(a, f, name)?),
    };
    let run = move || match command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Featurize(a) => commands::featurize(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Gridsearch(a) => commands::gridsearch(a),
        Command::Report(a) => commands::report(a),
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?
            .install(run),
        None => run(),
    }
}
