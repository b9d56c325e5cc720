//! Optional TOML run configuration. Command-line flags take precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sumread_core::metrics::AnswerSelection;

use crate::failure::{CmdResult, Failure};

pub const CONFIG_ENV: &str = "SUMREAD_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub strict: Option<bool>,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub score: ScoreConfig,
    #[serde(default)]
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub instances: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub outputs: Option<PathBuf>,
    pub logprobs: Option<PathBuf>,
    pub reports: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    /// Normalized containment for `--filter`; false means raw substring.
    pub normalize: Option<bool>,
    pub answer_selection: Option<AnswerSelection>,
    /// (train, validation) fractions.
    pub ratios: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tokenizer {
    Whitespace,
    Chars,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    pub tokenizer: Option<Tokenizer>,
    pub normalize_ira: Option<bool>,
    pub ira_selection: Option<AnswerSelection>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub steps: Option<usize>,
    pub vocab_size: Option<usize>,
    pub buckets: Option<usize>,
    pub max_response_len: Option<usize>,
    pub batch_size: Option<usize>,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> CmdResult<Self> {
        toml::from_str(text).map_err(|e| Failure::usage(format!("bad config: {e}")))
    }

    /// Reads `path`, or nothing when no config was given.
    pub fn load(path: Option<&Path>) -> CmdResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|f| f.context(path.display()))
    }
}
