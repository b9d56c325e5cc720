//! Summarizer (Types 1-3) and reader prompt rendering.
//!
//! Templates live in `templates/*.txt` and are compiled in verbatim.
//! Placeholders are substituted in a single left-to-right pass, so text
//! inside a substituted value is never re-expanded. Values are inserted
//! as-is: a context containing a line such as `Question: ...` will make
//! the rendered prompt ambiguous to a parser.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::QaInstance;
use crate::error::{Error, Result};

pub const TEMPLATE_VERSION: u32 = 1;

pub const TYPE1_TEMPLATE: &str = include_str!("../templates/type1.txt");
pub const TYPE2_TEMPLATE: &str = include_str!("../templates/type2.txt");
pub const TYPE3_TEMPLATE: &str = include_str!("../templates/type3.txt");
pub const READER_TEMPLATE: &str = include_str!("../templates/reader.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptType {
    /// Question, answer and context.
    Type1,
    /// Question and context.
    Type2,
    /// Answer and context.
    Type3,
    /// Reader input over a (filtered) context.
    Reader,
}

impl PromptType {
    pub const SUMMARIZER: [PromptType; 3] =
        [PromptType::Type1, PromptType::Type2, PromptType::Type3];

    pub fn template(self) -> &'static str {
        match self {
            PromptType::Type1 => TYPE1_TEMPLATE,
            PromptType::Type2 => TYPE2_TEMPLATE,
            PromptType::Type3 => TYPE3_TEMPLATE,
            PromptType::Reader => READER_TEMPLATE,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PromptType::Type1 => "type1",
            PromptType::Type2 => "type2",
            PromptType::Type3 => "type3",
            PromptType::Reader => "reader",
        }
    }

    pub fn uses_question(self) -> bool {
        !matches!(self, PromptType::Type3)
    }

    pub fn uses_answer(self) -> bool {
        matches!(self, PromptType::Type1 | PromptType::Type3)
    }
}

impl fmt::Display for PromptType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" | "type1" => Ok(PromptType::Type1),
            "2" | "type2" => Ok(PromptType::Type2),
            "3" | "type3" => Ok(PromptType::Type3),
            "reader" => Ok(PromptType::Reader),
            other => Err(Error::arg(format!("unknown prompt type `{other}`"))),
        }
    }
}

/// A rendered prompt; the `prompts.jsonl` record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub kind: PromptType,
    pub prompt: String,
}

#[derive(Default)]
struct Fields<'a> {
    context: Option<&'a str>,
    question: Option<&'a str>,
    answer: Option<&'a str>,
}

fn substitute(template: &str, fields: &Fields<'_>) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        let value = [
            ("{context}", fields.context),
            ("{question}", fields.question),
            ("{answer}", fields.answer),
        ]
        .into_iter()
        .find(|(name, _)| tail.starts_with(name));
        match value {
            Some((name, Some(v))) => {
                out.push_str(v);
                rest = &tail[name.len()..];
            }
            _ => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders a Type 1/2/3 summarizer prompt. `answer_index` picks the
/// reference answer for the types that show one.
pub fn render_summarizer_prompt(
    instance: &QaInstance,
    kind: PromptType,
    answer_index: usize,
) -> Result<PromptRecord> {
    if kind == PromptType::Reader {
        return Err(Error::arg(
            "reader prompts are rendered with render_reader_prompt",
        ));
    }
    let answer = if kind.uses_answer() {
        Some(instance.answers.get(answer_index).ok_or_else(|| {
            Error::arg(format!(
                "answer_index {} out of range for {} answers",
                answer_index,
                instance.answers.len()
            ))
        })?)
    } else {
        None
    };
    let fields = Fields {
        context: Some(&instance.context),
        question: kind.uses_question().then_some(instance.question.as_str()),
        answer: answer.map(String::as_str),
    };
    Ok(PromptRecord {
        id: instance.id.clone(),
        kind,
        prompt: substitute(kind.template(), &fields),
    })
}

/// Type 2 rendering of (question, context); the SFT input and DPO prompt.
pub fn render_type2(question: &str, context: &str) -> String {
    substitute(
        TYPE2_TEMPLATE,
        &Fields {
            context: Some(context),
            question: Some(question),
            answer: None,
        },
    )
}

pub fn render_reader_prompt(
    id: &str,
    question: &str,
    filtered_context: &str,
) -> Result<PromptRecord> {
    if question.trim().is_empty() {
        return Err(Error::arg("reader prompt needs a non-empty question"));
    }
    if filtered_context.trim().is_empty() {
        return Err(Error::arg("reader prompt needs a non-empty context"));
    }
    Ok(PromptRecord {
        id: id.to_owned(),
        kind: PromptType::Reader,
        prompt: substitute(
            READER_TEMPLATE,
            &Fields {
                context: Some(filtered_context),
                question: Some(question),
                answer: None,
            },
        ),
    })
}

/// Pulls the `Context:` value back out of a rendered prompt that has a
/// `Question:` line after it (Type 1, Type 2, reader).
pub fn extract_context(prompt: &str) -> Option<&str> {
    let start = prompt.find("\nContext: ")? + "\nContext: ".len();
    let end = start + prompt[start..].find("\nQuestion: ")?;
    Some(&prompt[start..end])
}
