//! Line-delimited JSON interchange files.
//!
//! Every pipeline stage reads and writes one JSON object per line. Readers
//! report problems by 1-based line number and honour [`ErrorMode`].

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dpo::Role;
use crate::error::{Collected, ErrorMode, RecordError, Result};
use crate::prompting::PromptType;

/// Reads a JSONL stream, keeping each record's line number. Blank lines
/// are skipped.
pub fn read_jsonl<T, R>(reader: R, mode: ErrorMode) -> Result<Collected<(usize, T)>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Collected::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => out.items.push((idx + 1, v)),
            Err(e) => out.reject(
                mode,
                RecordError::at_line(idx + 1, format!("malformed record: {e}")),
            )?,
        }
    }
    Ok(out)
}

pub fn write_jsonl<'a, T, W, I>(mut writer: W, items: I) -> Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

/// One generation in `outputs.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: String,
    pub kind: PromptType,
    pub text: String,
}

/// One response's token log-probabilities in `logprobs.jsonl` (natural log).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogprobRecord {
    pub id: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub policy_logprobs: Vec<f64>,
    pub reference_logprobs: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_with_line_numbers() {
        let data = "{\"id\":\"a\",\"kind\":\"type1\",\"text\":\"t\"}\n\n{oops\n{\"id\":\"b\",\"kind\":\"reader\",\"text\":\"u\"}\n";
        let got: Collected<(usize, OutputRecord)> =
            read_jsonl(data.as_bytes(), ErrorMode::Collect).unwrap();
        assert_eq!(
            got.items.iter().map(|(l, _)| *l).collect::<Vec<_>>(),
            [1, 4]
        );
        assert_eq!(
            got.errors[0].location,
            crate::error::RecordLocation::Line(3)
        );
        assert!(read_jsonl::<OutputRecord, _>(data.as_bytes(), ErrorMode::Strict).is_err());
    }

    #[test]
    fn logprob_record_shape() {
        let rec = LogprobRecord {
            id: "p".into(),
            role: Role::Chosen,
            beta: None,
            policy_logprobs: vec![-0.5],
            reference_logprobs: vec![-0.25],
        };
        let mut buf = Vec::new();
        write_jsonl(&mut buf, [&rec]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"id\":\"p\",\"role\":\"chosen\",\"policy_logprobs\":[-0.5],\"reference_logprobs\":[-0.25]}\n"
        );
    }
}
