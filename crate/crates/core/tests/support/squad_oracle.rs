//! Independent SQuAD-style EM / F1 reference, shared by the core tests and
//! the acceptance suite.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Character-scan normalization, written without regexes.
pub mod oracle {
    fn is_word(c: char) -> bool {
        c.is_alphanumeric() || c == '_'
    }

    pub fn normalize(text: &str) -> Vec<String> {
        let lowered = text.to_lowercase();
        let chars: Vec<char> = lowered
            .chars()
            .filter(|c| !c.is_ascii_punctuation())
            .collect();
        let mut out: Vec<char> = Vec::with_capacity(chars.len());
        let mut i = 0;
        while i < chars.len() {
            let at_start = i == 0 || !is_word(chars[i - 1]);
            let mut replaced = false;
            if at_start {
                for article in ["the", "an", "a"] {
                    let a: Vec<char> = article.chars().collect();
                    let end = i + a.len();
                    if end <= chars.len()
                        && chars[i..end] == a[..]
                        && (end == chars.len() || !is_word(chars[end]))
                    {
                        out.push(' ');
                        i = end;
                        replaced = true;
                        break;
                    }
                }
            }
            if !replaced {
                out.push(chars[i]);
                i += 1;
            }
        }
        let s: String = out.into_iter().collect();
        s.split_whitespace().map(str::to_owned).collect()
    }

    pub fn em(pred: &str, refs: &[String]) -> u8 {
        let p = normalize(pred).join(" ");
        refs.iter().any(|r| normalize(r).join(" ") == p) as u8
    }

    fn f1_one(pred: &[String], gold: &[String]) -> f64 {
        if pred.is_empty() && gold.is_empty() {
            return 1.0;
        }
        let mut used = vec![false; gold.len()];
        let mut same = 0usize;
        for p in pred {
            if let Some(j) = (0..gold.len()).find(|&j| !used[j] && gold[j] == *p) {
                used[j] = true;
                same += 1;
            }
        }
        if same == 0 {
            return 0.0;
        }
        let precision = same as f64 / pred.len() as f64;
        let recall = same as f64 / gold.len() as f64;
        2.0 * precision * recall / (precision + recall)
    }

    pub fn f1(pred: &str, refs: &[String]) -> f64 {
        let p = normalize(pred);
        refs.iter()
            .map(|r| f1_one(&p, &normalize(r)))
            .fold(0.0, f64::max)
    }
}

pub const PIECES: &[&str] = &[
    "the",
    "The",
    "THE",
    "a",
    "A",
    "an",
    "An",
    "cat",
    "Cat",
    "sat",
    "down",
    "paris",
    "Paris",
    "théâtre",
    "straße",
    "σοφία",
    "ΣΟΦΊΑ",
    "中文",
    "答案",
    "café",
    "😀",
    "x_y",
    "1,000",
    "50%",
    "u.s.a.",
    "rock'n'roll",
    "--",
    "!!",
    "¡",
    "«",
    "»",
    "—",
    "...",
    "(a)",
    "the-end",
    "an.",
    "a,",
    "theatre",
    "another",
    "anthem",
    "aa",
    "€",
    "zebra",
    "",
];
pub const SEPARATORS: &[&str] = &[" ", "  ", "\t", "\n", "", ",", "-", " the ", " a "];

/// Random text mixing unicode, punctuation and articles.
pub fn random_text(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(0..7);
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(PIECES[rng.random_range(0..PIECES.len())]);
        s.push_str(SEPARATORS[rng.random_range(0..SEPARATORS.len())]);
    }
    s
}
