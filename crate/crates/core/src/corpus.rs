//! QA corpus ingestion, answer-containment filtering and splitting.
//!
//! Two source layouts are understood: SQuAD v1.1 JSON (article / paragraph /
//! qas nesting) and a line-delimited retrieval dump where every line carries
//! its retrieved contexts in rank order. Both produce [`QaInstance`]s.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Collected, Error, ErrorMode, RecordError, Result};
use crate::metrics::{answer_in_context, AnswerSelection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Squad,
    Retrieved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "dev" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::arg(format!("unknown split `{other}`"))),
        }
    }
}

/// One (question, answers, context) record. Field order is the
/// `instances.jsonl` key order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaInstance {
    pub id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub context: String,
    pub source: Source,
    pub split: Split,
}

impl QaInstance {
    /// Checks the per-record invariants.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("empty id".into());
        }
        if self.answers.is_empty() {
            return Err("no answers".into());
        }
        if self.answers.iter().any(|a| a.trim().is_empty()) {
            return Err("blank answer".into());
        }
        if self.context.trim().is_empty() {
            return Err("empty context".into());
        }
        Ok(())
    }

    pub fn first_answer(&self) -> &str {
        &self.answers[0]
    }
}

/// Partition counts of one filtering pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// `None` when the input mixed several splits.
    pub split: Option<Split>,
    pub total: usize,
    pub kept: usize,
    pub dropped: usize,
    pub kept_fraction: f64,
}

impl CorpusStats {
    pub fn new(split: Option<Split>, total: usize, kept: usize) -> Self {
        Self {
            split,
            total,
            kept,
            dropped: total - kept,
            kept_fraction: if total == 0 {
                0.0
            } else {
                kept as f64 / total as f64
            },
        }
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let split = self
            .split
            .map_or_else(|| "mixed".to_owned(), |s| s.to_string());
        write!(
            f,
            "split={} total={} kept={} dropped={} kept_fraction={:.4}",
            split, self.total, self.kept, self.dropped, self.kept_fraction
        )
    }
}

#[derive(Deserialize)]
struct SquadFile {
    #[serde(default)]
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    #[serde(default)]
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    #[serde(default)]
    qas: Vec<SquadQa>,
}

#[derive(Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
}

#[derive(Deserialize)]
struct SquadAnswer {
    text: String,
}

/// Converts serde_json's 1-based line/column into a byte offset.
fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start = bytes
        .iter()
        .enumerate()
        .filter(|(_, b)| **b == b'\n')
        .nth(line.saturating_sub(2))
        .map_or(0, |(i, _)| i + 1);
    let line_start = if line <= 1 { 0 } else { line_start };
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

fn push_checked(
    out: &mut Collected<QaInstance>,
    seen: &mut HashSet<String>,
    inst: QaInstance,
    mode: ErrorMode,
    locate: impl FnOnce(String) -> RecordError,
) -> Result<()> {
    if let Err(msg) = inst.validate() {
        return out.reject(mode, locate(msg));
    }
    if !seen.insert(inst.id.clone()) {
        return out.reject(mode, locate(format!("duplicate id `{}`", inst.id)));
    }
    out.items.push(inst);
    Ok(())
}

/// Parses a SQuAD-v1.1-shaped document; one instance per qa.
pub fn parse_squad(bytes: &[u8], split: Split, mode: ErrorMode) -> Result<Collected<QaInstance>> {
    let file: SquadFile = serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    let mut out = Collected::new();
    let mut seen = HashSet::new();
    for article in file.data {
        for para in article.paragraphs {
            for qa in para.qas {
                let id = qa.id.clone();
                let inst = QaInstance {
                    id: qa.id,
                    question: qa.question,
                    answers: qa.answers.into_iter().map(|a| a.text).collect(),
                    context: para.context.clone(),
                    source: Source::Squad,
                    split,
                };
                push_checked(&mut out, &mut seen, inst, mode, |m| {
                    RecordError::for_id(id, m)
                })?;
            }
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LooseId {
    Text(String),
    Number(i64),
}

impl From<LooseId> for String {
    fn from(id: LooseId) -> Self {
        match id {
            LooseId::Text(s) => s,
            LooseId::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RetrievedLine {
    id: LooseId,
    question: String,
    answers: Vec<String>,
    contexts: Vec<RetrievedContext>,
}

#[derive(Deserialize)]
struct RetrievedContext {
    text: String,
}

/// Parses a retrieval dump, keeping only each line's rank-1 context.
/// Blank lines are ignored.
pub fn parse_retrieved<R: BufRead>(
    reader: R,
    split: Split,
    mode: ErrorMode,
) -> Result<Collected<QaInstance>> {
    let mut out = Collected::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: RetrievedLine = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                out.reject(
                    mode,
                    RecordError::at_line(lineno, format!("malformed record: {e}")),
                )?;
                continue;
            }
        };
        let Some(top) = rec.contexts.into_iter().next() else {
            out.reject(mode, RecordError::at_line(lineno, "no retrieved contexts"))?;
            continue;
        };
        let inst = QaInstance {
            id: rec.id.into(),
            question: rec.question,
            answers: rec.answers,
            context: top.text,
            source: Source::Retrieved,
            split,
        };
        push_checked(&mut out, &mut seen, inst, mode, |m| {
            RecordError::at_line(lineno, m)
        })?;
    }
    Ok(out)
}

/// Containment filter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterOptions {
    pub normalize: bool,
    pub selection: AnswerSelection,
}

impl Default for FilterOptions {
    fn default() -> Self {
        Self {
            normalize: true,
            selection: AnswerSelection::First,
        }
    }
}

/// Keeps instances whose selected answer occurs in their context.
///
/// Uses the same containment test as IRA, so every kept instance has
/// IRA = 1 on its own context under the same options.
pub fn filter_answer_in_context(
    instances: Vec<QaInstance>,
    opts: FilterOptions,
) -> (Vec<QaInstance>, CorpusStats) {
    let total = instances.len();
    let mut splits = instances.iter().map(|i| i.split);
    let split = splits.next().filter(|first| splits.all(|s| s == *first));
    let kept: Vec<QaInstance> = instances
        .into_iter()
        .filter(|inst| match opts.selection {
            AnswerSelection::First => {
                answer_in_context(inst.first_answer(), &inst.context, opts.normalize)
            }
            AnswerSelection::Any => inst
                .answers
                .iter()
                .any(|a| answer_in_context(a, &inst.context, opts.normalize)),
        })
        .collect();
    let stats = CorpusStats::new(split, total, kept.len());
    (kept, stats)
}

/// Result of [`split_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitSet {
    pub train: Vec<QaInstance>,
    pub validation: Vec<QaInstance>,
    pub test: Vec<QaInstance>,
}

impl SplitSet {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.validation.len(), self.test.len())
    }
}

const RATIO_EPS: f64 = 1e-9;

/// Seeded random partition into train / validation / test.
///
/// Sizes are `floor(ratio * n)`; the remainder goes to the last split,
/// which is validation when the ratios sum to 1 and test otherwise.
/// Each output keeps input order and has its `split` field rewritten.
pub fn split_dataset(
    instances: Vec<QaInstance>,
    ratios: (f64, f64),
    seed: u64,
) -> Result<SplitSet> {
    let (train_r, val_r) = ratios;
    if !(train_r > 0.0 && val_r > 0.0 && train_r.is_finite() && val_r.is_finite()) {
        return Err(Error::arg("split ratios must be positive"));
    }
    let sum = train_r + val_r;
    if sum > 1.0 + RATIO_EPS {
        return Err(Error::arg(format!(
            "split ratios sum to {sum}, more than 1"
        )));
    }
    let n = instances.len();
    let n_train = ((train_r * n as f64) + RATIO_EPS).floor() as usize;
    let n_val = if sum >= 1.0 - RATIO_EPS {
        n - n_train
    } else {
        (((val_r * n as f64) + RATIO_EPS).floor() as usize).min(n - n_train)
    };

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![Split::Test; n];
    for &i in &order[..n_train] {
        assignment[i] = Split::Train;
    }
    for &i in &order[n_train..n_train + n_val] {
        assignment[i] = Split::Validation;
    }

    let mut out = SplitSet::default();
    for (mut inst, split) in instances.into_iter().zip(assignment) {
        inst.split = split;
        match split {
            Split::Train => out.train.push(inst),
            Split::Validation => out.validation.push(inst),
            Split::Test => out.test.push(inst),
        }
    }
    Ok(out)
}
