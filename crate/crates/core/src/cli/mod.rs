//! The `attnmt` command line: `prep`, `train`, `translate`, `experiment`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 runtime error.

mod commands;
mod config_file;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config_file::{merge_config_file, parse_config_text};

use crate::harness::{Study, SyntheticKind};
use crate::model::CellKind;
use crate::tensor::ActivationKind;
use crate::text::Script;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "attnmt", version, about = "Attention-based English to Bangla translation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Normalize a corpus, split it, build vocabularies and encode it
    Prep(PrepArgs),
    /// Train (or resume training) a model on a prepared directory
    Train(TrainArgs),
    /// Translate sentences with a trained checkpoint
    Translate(TranslateArgs),
    /// Run one of the ablation studies and write its report
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// 1024 units, 256-wide embeddings, batch 64
    Full,
    /// 64 units, 32-wide embeddings, batch 16
    Desk,
}

impl Preset {
    fn units(self) -> usize {
        match self {
            Preset::Full => 1024,
            Preset::Desk => 64,
        }
    }

    fn embed_dim(self) -> usize {
        match self {
            Preset::Full => 256,
            Preset::Desk => 32,
        }
    }

    fn batch_size(self) -> usize {
        match self {
            Preset::Full => 64,
            Preset::Desk => 16,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Seed for every random choice the command makes
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// File of key=value lines supplying flag values; command-line flags win
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Recurrent units [default: 1024 full, 64 desk]
    #[arg(long)]
    pub units: Option<usize>,
    /// Embedding width [default: 256 full, 32 desk]
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Attention hidden width [default: same as --units]
    #[arg(long)]
    pub attention_dim: Option<usize>,
    /// Recurrent cell: gru or lstm
    #[arg(long, default_value = "gru")]
    pub cell: CellKind,
    /// Encoder activation: linear or tanh
    #[arg(long, default_value = "linear")]
    pub encoder_activation: ActivationKind,
    /// Decoder activation: linear or tanh
    #[arg(long, default_value = "tanh")]
    pub decoder_activation: ActivationKind,
    /// Activation inside the attention score: sigmoid or tanh
    #[arg(long, default_value = "sigmoid")]
    pub attention_inner: ActivationKind,
    /// Attention weight normalization: softmax or sigmoid
    #[arg(long, default_value = "softmax")]
    pub attention_outer: ActivationKind,
    /// Sentences per batch [default: 64 full, 16 desk]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Adam learning rate
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    /// Clip the joint gradient norm to this value
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct PrepArgs {
    /// Tab-separated corpus, one `source<TAB>target` pair per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of pairs used for training
    #[arg(long, default_value_t = 0.8)]
    pub train_ratio: f64,
    #[arg(long, default_value = "en")]
    pub source_script: Script,
    #[arg(long, default_value = "bn")]
    pub target_script: Script,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct TrainArgs {
    /// Directory written by `prep`
    #[arg(long)]
    pub prep_dir: PathBuf,
    /// Directory for `latest.s2sf` and `metrics.csv`; an existing checkpoint is resumed
    #[arg(long)]
    pub checkpoint_dir: PathBuf,
    /// Total epochs to reach
    #[arg(long, default_value_t = 30)]
    pub epochs: u64,
    /// Save a checkpoint every this many epochs (and after the last)
    #[arg(long, default_value_t = 1)]
    pub checkpoint_every: u64,
    /// Size preset for flags left unset
    #[arg(long, value_enum, default_value_t = Preset::Full)]
    pub preset: Preset,
    /// Record real wall-clock seconds in metrics.csv instead of 0
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct TranslateArgs {
    /// Checkpoint file, or a checkpoint directory holding `latest.s2sf`
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Directory written by `prep` (vocabularies)
    #[arg(long)]
    pub prep_dir: PathBuf,
    /// Sentence to translate
    #[arg(long, conflicts_with = "input")]
    pub sentence: Option<String>,
    /// File with one sentence per line [default: standard input]
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct ExperimentArgs {
    /// activation-grid, attention-grid, cells or epoch-study
    pub study: Study,
    /// Report CSV path; the JSON sidecar goes next to it [default: <study>.csv]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Epochs per sweep entry [default: 30 for the grids, 50 cells, 100 epoch-study]
    #[arg(long)]
    pub epochs: Option<u64>,
    /// Size preset for flags left unset
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    /// Train on this tab-separated corpus instead of a synthetic one
    #[arg(long, conflicts_with = "synthetic")]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value = "en")]
    pub source_script: Script,
    #[arg(long, default_value = "bn")]
    pub target_script: Script,
    /// Synthetic corpus kind: copy, reverse or mapped-bilingual [default: copy for cells, mapped-bilingual otherwise]
    #[arg(long)]
    pub synthetic: Option<SyntheticKind>,
    /// Synthetic sentence pairs
    #[arg(long, default_value_t = 64)]
    pub n_pairs: usize,
    /// Synthetic vocabulary size per side, counting the 4 reserved ids [default: 20 for cells, 30 otherwise]
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Synthetic encoded length bound, end token included [default: 5 for cells, 6 otherwise]
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Seed for the synthetic corpus [default: --seed]
    #[arg(long)]
    pub corpus_seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Failure of a command, classified for its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(Error),
    #[error("{0}")]
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            CliError::Data(e)
        } else {
            CliError::Runtime(e)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config_file(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: config file: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
