//! Data files shipped with the crate.

use std::path::PathBuf;

use crate::corpus::{filter_answer_in_context, parse_squad, FilterOptions, QaInstance, Split};
use crate::error::{ErrorMode, Result};
use crate::interchange::{read_jsonl, OutputRecord};
use crate::pairbuilder::{build_sft_dataset, OutputTable, SftExample};
use crate::synthetic::SymbolPair;
use crate::toy::{TokenPair, ToyVocab};

pub const MICRO_SQUAD_JSON: &str = include_str!("../data/micro/squad.json");
pub const MICRO_OUTPUTS_JSONL: &str = include_str!("../data/micro/outputs.jsonl");
pub const MICRO_READER_ORIGIN_JSONL: &str = include_str!("../data/micro/reader_origin.jsonl");
pub const MICRO_READER_FILTERED_JSONL: &str = include_str!("../data/micro/reader_filtered.jsonl");
pub const SEPARABLE_PAIRS_JSONL: &str = include_str!("../data/toy/separable_pairs.jsonl");

/// Directory holding the shipped data files in a source checkout.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// The shipped separable preference set in token form.
pub fn separable_pairs(vocab: &ToyVocab) -> Result<Vec<TokenPair>> {
    SEPARABLE_PAIRS_JSONL
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str::<SymbolPair>(l)?.to_tokens(vocab))
        .collect()
}

/// The micro-corpus after the default containment filter.
pub fn micro_instances() -> Result<Vec<QaInstance>> {
    let parsed = parse_squad(
        MICRO_SQUAD_JSON.as_bytes(),
        Split::Validation,
        ErrorMode::Strict,
    )?;
    Ok(filter_answer_in_context(parsed.items, FilterOptions::default()).0)
}

/// Canned Type 1/2/3 summaries for the micro-corpus.
pub fn micro_outputs() -> Result<Vec<OutputRecord>> {
    let c = read_jsonl(MICRO_OUTPUTS_JSONL.as_bytes(), ErrorMode::Strict)?;
    Ok(c.items.into_iter().map(|(_, r)| r).collect())
}

/// SFT examples (Type 2 input, O1 target) for the filtered micro-corpus.
pub fn micro_sft_examples() -> Result<Vec<SftExample>> {
    let table = OutputTable::from_records(&micro_outputs()?)?;
    Ok(build_sft_dataset(&micro_instances()?, &table).0)
}
