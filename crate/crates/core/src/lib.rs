//! Summarize-then-read context filtering toolkit.
//!
//! - [`corpus`]: SQuAD / retrieval-dump ingestion, answer-containment
//!   filtering and seeded splits.
//! - [`prompting`]: Type 1/2/3 summarizer prompts and the reader prompt.
//! - [`pairbuilder`]: SFT examples and DPO preference pairs.
//! - [`dpo`]: implicit rewards, the DPO loss and its gradient.
//! - [`toy`]: a tabular autoregressive policy trained with SFT and DPO.
//! - [`metrics`]: EM, unigram F1, token length, EPT, IRA and reports.

pub mod bundled;
pub mod corpus;
pub mod dpo;
pub mod error;
pub mod interchange;
pub mod metrics;
pub mod pairbuilder;
pub mod prompting;
pub mod synthetic;
pub mod toy;

pub use corpus::{CorpusStats, QaInstance, Source, Split};
pub use dpo::{LossReport, RewardMargin, Role, SequenceLogprobs};
pub use error::{Error, ErrorMode, RecordError, Result};
pub use interchange::{LogprobRecord, OutputRecord};
pub use metrics::{AggregateReport, NormalizedText, ScoreRow};
pub use pairbuilder::{DpoVariant, PairBuildStats, PreferencePair, SftExample};
pub use prompting::{PromptRecord, PromptType};
