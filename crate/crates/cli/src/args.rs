use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sumread_core::corpus::Split;
use sumread_core::pairbuilder::DpoVariant;
use sumread_core::prompting::PromptType;
use sumread_core::toy::TrainMode;

use crate::config::{Tokenizer, CONFIG_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "sumread",
    version,
    about = "Summarize-then-read context filtering pipeline"
)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    /// Fail on the first bad record (exit 2) instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a SQuAD file or retrieval dump into instances.jsonl.
    Ingest(IngestArgs),
    /// Render summarizer or reader prompts for each instance.
    Prompts(PromptsArgs),
    /// Build SFT examples or DPO preference pairs from summaries.
    Pairs(PairsArgs),
    /// Check a pairs.jsonl file for duplicates, empty fields and prompt shape.
    ValidatePairs(ValidatePairsArgs),
    /// Score reader outputs and write scores.jsonl plus reports.
    Score(ScoreArgs),
    /// Train the toy tabular policy with SFT or DPO.
    TrainToy(TrainToyArgs),
    /// Compare toy-policy gradients with finite differences.
    CheckGrad(CheckGradArgs),
    /// Evaluate the DPO objective on per-token log-probabilities.
    DpoEval(DpoEvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Squad,
    Retrieved,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_enum)]
    pub format: InputFormat,
    pub input: PathBuf,
    /// Split label written on each instance (train, validation/dev, test).
    #[arg(long, default_value = "train")]
    pub split: Split,
    /// Keep only instances whose answer occurs in the context.
    #[arg(long)]
    pub filter: bool,
    /// Use raw substring containment when filtering.
    #[arg(long, conflicts_with = "normalize")]
    pub raw: bool,
    /// Use normalized token containment when filtering (default).
    #[arg(long)]
    pub normalize: bool,
    /// Accept any reference answer instead of the first when filtering.
    #[arg(long)]
    pub any_answer: bool,
    /// Output file; defaults to paths.instances or instances.jsonl.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Split into train/validation/test with these (train,validation) ratios.
    #[arg(long, value_name = "TRAIN,VALIDATION", value_parser = parse_ratios)]
    pub ratios: Option<(f64, f64)>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory for train/validation/test.jsonl when splitting.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn parse_ratios(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected TRAIN,VALIDATION")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Args)]
pub struct PromptsArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Comma-separated prompt types: 1, 2, 3, reader.
    #[arg(long, value_delimiter = ',', required = true)]
    pub types: Vec<PromptType>,
    /// Which reference answer fills the answer slot.
    #[arg(long, default_value_t = 0)]
    pub answer_index: usize,
    /// Summaries to use as the reader's context; instance contexts otherwise.
    #[arg(long)]
    pub context_from: Option<PathBuf>,
    /// Output kind taken from --context-from.
    #[arg(long, default_value = "type1")]
    pub context_kind: PromptType,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PairsKind {
    Sft,
    Dpo,
}

#[derive(Debug, Args)]
pub struct PairsArgs {
    #[arg(value_enum)]
    pub kind: PairsKind,
    #[arg(long)]
    pub instances: Option<PathBuf>,
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    /// Rejected output for DPO pairs.
    #[arg(long, default_value = "o1_vs_o2")]
    pub variant: DpoVariant,
    /// Defaults to sft.jsonl or pairs.jsonl.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidatePairsArgs {
    pub pairs: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Reader outputs (kind "reader").
    #[arg(long)]
    pub outputs: Option<PathBuf>,
    /// Contexts the reader saw; instance contexts otherwise.
    #[arg(long)]
    pub contexts: Option<PathBuf>,
    #[arg(long, default_value = "type1")]
    pub context_kind: PromptType,
    /// Row label in the report.
    #[arg(long, default_value = "model")]
    pub model: String,
    /// scores.jsonl of an unfiltered run for retention.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value = "Origin")]
    pub baseline_name: String,
    #[arg(long, value_enum)]
    pub tokenizer: Option<Tokenizer>,
    /// Raw substring test for IRA instead of normalized tokens.
    #[arg(long)]
    pub raw_ira: bool,
    /// Directory for scores.jsonl, report.md, report.csv, report.json.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ToyModelArgs {
    #[arg(long, default_value = "dpo")]
    pub mode: TrainMode,
    /// sft.jsonl or pairs.jsonl text data; bundled data otherwise.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Response truncation when hashing text data into tokens.
    #[arg(long)]
    pub max_response_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    #[command(flatten)]
    pub model: ToyModelArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Start from this checkpoint instead of a fresh init.
    #[arg(long)]
    pub init: Option<PathBuf>,
    #[arg(long, default_value = "policy.json")]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "trace.csv")]
    pub trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckGradArgs {
    #[command(flatten)]
    pub model: ToyModelArgs,
    #[arg(long, default_value_t = 100)]
    pub coords: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = sumread_core::toy::gradcheck::DEFAULT_STEP)]
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LengthNormArg {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct DpoEvalArgs {
    #[arg(long)]
    pub logprobs: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum, default_value = "sum")]
    pub length_norm: LengthNormArg,
    #[arg(short, long, default_value = "dpo_eval.json")]
    pub output: PathBuf,
}
