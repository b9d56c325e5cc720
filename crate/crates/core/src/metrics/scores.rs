//! Per-instance QA scores: EM, unigram F1, token length, EPT and IRA.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::normalize::{normalize_answer, NormalizedText};
use crate::error::{Error, Result};

/// Which reference answers count for answer-containment checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerSelection {
    /// Only the first reference answer.
    #[default]
    First,
    /// Any reference answer.
    Any,
}

fn require_refs(references: &[impl AsRef<str>]) -> Result<()> {
    if references.is_empty() {
        return Err(Error::arg("reference list is empty"));
    }
    Ok(())
}

/// 1 iff the normalized prediction equals some normalized reference.
pub fn exact_match(prediction: &str, references: &[impl AsRef<str>]) -> Result<u8> {
    require_refs(references)?;
    let pred = normalize_answer(prediction);
    let hit = references
        .iter()
        .any(|r| normalize_answer(r.as_ref()) == pred);
    Ok(hit as u8)
}

fn f1_tokens(pred: &NormalizedText, reference: &NormalizedText) -> f64 {
    if pred.is_empty() && reference.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for t in &reference.tokens {
        *counts.entry(t.as_str()).or_default() += 1;
    }
    let mut overlap = 0usize;
    for t in &pred.tokens {
        if let Some(c) = counts.get_mut(t.as_str()) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let precision = overlap as f64 / pred.len() as f64;
    let recall = overlap as f64 / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Multiset unigram F1, maximised over references.
///
/// Two empty token lists score 1.0 so that EM = 1 always implies F1 = 1.
pub fn unigram_f1(prediction: &str, references: &[impl AsRef<str>]) -> Result<f64> {
    require_refs(references)?;
    let pred = normalize_answer(prediction);
    Ok(references
        .iter()
        .map(|r| f1_tokens(&pred, &normalize_answer(r.as_ref())))
        .fold(0.0, f64::max))
}

/// Counts the tokens of a context string.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// Whitespace split; the default counter.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

/// Unicode scalar count, a crude stand-in for byte/char-level tokenizers.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharCounter;

impl TokenCounter for CharCounter {
    fn count(&self, text: &str) -> usize {
        text.chars().filter(|c| !c.is_whitespace()).count()
    }
}

/// Adapter for an external (e.g. model subword) tokenizer.
impl<F> TokenCounter for F
where
    F: Fn(&str) -> usize,
{
    fn count(&self, text: &str) -> usize {
        self(text)
    }
}

pub fn token_count(text: &str, counter: &dyn TokenCounter) -> Result<usize> {
    if text.trim().is_empty() {
        return Err(Error::arg("cannot count tokens of empty text"));
    }
    match counter.count(text) {
        0 => Err(Error::arg("tokenizer produced zero tokens")),
        n => Ok(n),
    }
}

/// EM per token of the supplied context.
pub fn ept(em: u8, token_len: usize) -> Result<f64> {
    if token_len == 0 {
        return Err(Error::arg("token_len must be at least 1"));
    }
    Ok(f64::from(em) / token_len as f64)
}

/// Answer containment test shared by IRA and the corpus filter.
///
/// Raw mode is a byte-level substring test. Normalized mode looks for the
/// answer's normalized tokens as a contiguous run in the context's
/// normalized tokens; an answer that normalizes to nothing (e.g. "The")
/// falls back to the raw test.
pub fn answer_in_context(answer: &str, context: &str, normalize: bool) -> bool {
    let raw = || {
        let a = answer.trim();
        !a.is_empty() && context.contains(a)
    };
    if !normalize {
        return raw();
    }
    let needle = normalize_answer(answer);
    if needle.is_empty() {
        return raw();
    }
    normalize_answer(context).contains_run(&needle)
}

/// Inclusion rate of answer for one context: 1 when the selected answer
/// is fully present.
pub fn ira(
    answers: &[impl AsRef<str>],
    context: &str,
    normalize: bool,
    selection: AnswerSelection,
) -> Result<u8> {
    if answers.is_empty() {
        return Err(Error::arg("answer list is empty"));
    }
    let hit = match selection {
        AnswerSelection::First => answer_in_context(answers[0].as_ref(), context, normalize),
        AnswerSelection::Any => answers
            .iter()
            .any(|a| answer_in_context(a.as_ref(), context, normalize)),
    };
    Ok(hit as u8)
}

/// Scores for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    pub em: u8,
    pub f1: f64,
    pub token_len: usize,
    pub ept: f64,
    pub ira: u8,
}

/// Knobs shared by every row of a scoring run.
#[derive(Clone, Copy)]
pub struct ScoreOptions<'a> {
    pub counter: &'a dyn TokenCounter,
    pub normalize_ira: bool,
    pub ira_selection: AnswerSelection,
}

impl Default for ScoreOptions<'_> {
    fn default() -> Self {
        Self {
            counter: &WhitespaceCounter,
            normalize_ira: true,
            ira_selection: AnswerSelection::First,
        }
    }
}

/// Scores a reader prediction made from `context`.
pub fn score_row(
    id: &str,
    prediction: &str,
    references: &[impl AsRef<str>],
    context: &str,
    opts: &ScoreOptions<'_>,
) -> Result<ScoreRow> {
    let em = exact_match(prediction, references)?;
    let f1 = unigram_f1(prediction, references)?;
    let token_len = token_count(context, opts.counter)?;
    Ok(ScoreRow {
        id: id.to_owned(),
        em,
        f1,
        token_len,
        ept: ept(em, token_len)?,
        ira: ira(references, context, opts.normalize_ira, opts.ira_selection)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn em_examples() {
        assert_eq!(exact_match("Paris", &["Paris"]).unwrap(), 1);
        assert_eq!(exact_match("the Paris", &["Paris"]).unwrap(), 1);
        assert_eq!(exact_match("Paris, France", &["Paris"]).unwrap(), 0);
        assert_eq!(exact_match("france", &["Paris", "France"]).unwrap(), 1);
        assert!(exact_match("x", &[] as &[&str]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(unigram_f1("a b c", &["a b c"]).unwrap(), 1.0);
        assert_eq!(unigram_f1("cat", &["dog"]).unwrap(), 0.0);
        let f = unigram_f1("cat sat", &["the cat sat down"]).unwrap();
        assert!((f - 0.8).abs() < 1e-15, "{f}");
        assert!(unigram_f1("x", &[] as &[&str]).is_err());
    }

    #[test]
    fn f1_counts_multiset_overlap() {
        // pred has "cat" twice, reference once: overlap 1, P = 1/2, R = 1
        let f = unigram_f1("cat cat", &["cat"]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn f1_empty_sides() {
        assert_eq!(unigram_f1("the", &["a"]).unwrap(), 1.0);
        assert_eq!(unigram_f1("the", &["dog"]).unwrap(), 0.0);
        assert_eq!(unigram_f1("dog", &["!!"]).unwrap(), 0.0);
    }

    #[test]
    fn token_counting() {
        assert_eq!(token_count("a b  c", &WhitespaceCounter).unwrap(), 3);
        assert_eq!(token_count("word", &WhitespaceCounter).unwrap(), 1);
        assert!(token_count("", &WhitespaceCounter).is_err());
        assert!(token_count("   ", &WhitespaceCounter).is_err());
        let subword = |t: &str| t.len().div_ceil(4);
        assert_eq!(token_count("abcdefgh", &subword).unwrap(), 2);
    }

    #[test]
    fn ept_formula() {
        assert_eq!(ept(1, 20).unwrap(), 0.05);
        assert_eq!(ept(0, 7).unwrap(), 0.0);
        assert!(ept(1, 0).is_err());
    }

    #[test]
    fn ira_examples() {
        let ctx = "the capital Paris is large";
        assert_eq!(
            ira(&["Paris"], ctx, false, AnswerSelection::First).unwrap(),
            1
        );
        assert_eq!(
            ira(&["Paris France"], ctx, true, AnswerSelection::First).unwrap(),
            0
        );
        assert_eq!(
            ira(&["Paris France"], ctx, false, AnswerSelection::First).unwrap(),
            0
        );
        assert!(ira(&[] as &[&str], ctx, true, AnswerSelection::First).is_err());
    }

    #[test]
    fn ira_selection_policy() {
        let ctx = "Lyon is a city";
        let answers = ["Paris", "Lyon"];
        assert_eq!(ira(&answers, ctx, true, AnswerSelection::First).unwrap(), 0);
        assert_eq!(ira(&answers, ctx, true, AnswerSelection::Any).unwrap(), 1);
    }

    #[test]
    fn containment_modes() {
        let ctx = "...the beatles formed in 1960...";
        assert!(answer_in_context("The Beatles", ctx, true));
        assert!(!answer_in_context("The Beatles", ctx, false));
        // token-level, so partial words don't count in normalized mode
        assert!(!answer_in_context("beat", ctx, true));
        assert!(answer_in_context("beat", ctx, false));
        // article-only answer falls back to raw matching
        assert!(answer_in_context("the", ctx, true));
    }

    #[test]
    fn score_row_identity() {
        let row = score_row(
            "q1",
            "Paris",
            &["Paris"],
            "Paris is in France",
            &ScoreOptions::default(),
        )
        .unwrap();
        assert_eq!(row.em, 1);
        assert_eq!(row.token_len, 4);
        assert_eq!(row.ept * row.token_len as f64, 1.0);
        assert_eq!(row.ira, 1);
    }
}
