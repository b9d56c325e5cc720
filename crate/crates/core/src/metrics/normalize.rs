//! Answer normalization in the SQuAD evaluation convention.
//!
//! Lowercase, drop ASCII punctuation, remove the English articles
//! `a`/`an`/`the` at word boundaries, then split on whitespace. The one
//! routine is shared by EM, F1, IRA and the corpus containment filter.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

fn articles() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(a|an|the)\b").expect("static regex"))
}

/// Token list produced by [`normalize_answer`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct NormalizedText {
    pub tokens: Vec<String>,
}

impl NormalizedText {
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Tokens joined by single spaces (the string form SQuAD compares).
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }

    /// True when `needle` occurs as a contiguous run of tokens.
    ///
    /// An empty needle is never contained.
    pub fn contains_run(&self, needle: &NormalizedText) -> bool {
        if needle.is_empty() || needle.len() > self.len() {
            return false;
        }
        self.tokens
            .windows(needle.len())
            .any(|w| w == needle.tokens.as_slice())
    }
}

pub fn normalize_answer(text: &str) -> NormalizedText {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    let no_articles = articles().replace_all(&no_punct, " ");
    NormalizedText {
        tokens: no_articles.split_whitespace().map(str::to_owned).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        normalize_answer(s).tokens
    }

    #[test]
    fn strips_articles_and_punctuation() {
        assert_eq!(toks("The Eiffel Tower!"), vec!["eiffel", "tower"]);
        assert_eq!(toks("a  An THE dog"), vec!["dog"]);
        assert!(toks("").is_empty());
    }

    #[test]
    fn articles_only_removed_at_word_boundaries() {
        assert_eq!(toks("theatre anthem"), vec!["theatre", "anthem"]);
        // punctuation is removed before article matching
        assert_eq!(toks("the-end"), vec!["theend"]);
        assert_eq!(toks("a.b"), vec!["ab"]);
    }

    #[test]
    fn unicode_is_lowercased_but_kept() {
        assert_eq!(toks("Éclair ¡Olé!"), vec!["éclair", "¡olé"]);
    }

    #[test]
    fn contiguous_run() {
        let hay = normalize_answer("the beatles formed in Liverpool");
        assert!(hay.contains_run(&normalize_answer("The Beatles")));
        assert!(hay.contains_run(&normalize_answer("formed in liverpool")));
        assert!(!hay.contains_run(&normalize_answer("beatles liverpool")));
        assert!(!hay.contains_run(&normalize_answer("the")));
    }
}
