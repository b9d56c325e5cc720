//! JSON checkpoint format for the toy policy.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::policy::PolicyParams;
use super::vocab::ToyVocab;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "sumread-toy-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    vocab: ToyVocab,
    buckets: usize,
    vocab_size: usize,
    seed: u64,
    logits: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(params: &PolicyParams, mut writer: W) -> Result<()> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        vocab: params.vocab.clone(),
        buckets: params.buckets,
        vocab_size: params.vocab_size(),
        seed: params.seed,
        logits: params.logits.clone(),
    };
    serde_json::to_writer(&mut writer, &file)?;
    writer.write_all(b"\n")?;
    writer.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(reader: R) -> Result<PolicyParams> {
    let file: CheckpointFile = serde_json::from_reader(reader)?;
    if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
        return Err(Error::arg(format!(
            "unsupported checkpoint {} v{}",
            file.format, file.version
        )));
    }
    if file.vocab_size != file.vocab.len() {
        return Err(Error::arg(
            "checkpoint vocab_size disagrees with its vocabulary",
        ));
    }
    let mut params = PolicyParams::zeros(file.vocab, file.buckets)?;
    if file.logits.len() != params.num_params() {
        return Err(Error::arg(format!(
            "checkpoint has {} logits, expected {}",
            file.logits.len(),
            params.num_params()
        )));
    }
    params.logits = file.logits;
    params.seed = file.seed;
    if !params.all_finite() {
        return Err(Error::arg("checkpoint contains non-finite logits"));
    }
    Ok(params)
}
