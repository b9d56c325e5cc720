use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::train::{TokenExample, TokenPair};
use crate::error::{Error, Result};
use crate::pairbuilder::{PreferencePair, SftExample};

pub const BOS: &str = "<bos>";
pub const EOS: &str = "<eos>";
pub const MAX_VOCAB: usize = 64;

/// Index into a [`ToyVocab`].
pub type TokenId = usize;

/// Ordered symbol table of the toy policy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ToyVocab {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
    bos: TokenId,
    eos: TokenId,
}

impl ToyVocab {
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() > MAX_VOCAB {
            return Err(Error::arg(format!(
                "vocabulary of {} exceeds {}",
                tokens.len(),
                MAX_VOCAB
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::arg(format!("duplicate vocabulary symbol `{t}`")));
            }
        }
        let bos = *index
            .get(BOS)
            .ok_or_else(|| Error::arg("vocabulary lacks <bos>"))?;
        let eos = *index
            .get(EOS)
            .ok_or_else(|| Error::arg("vocabulary lacks <eos>"))?;
        Ok(Self {
            tokens,
            index,
            bos,
            eos,
        })
    }

    /// `<bos>`, `<eos>` and `size - 2` symbols `t0`, `t1`, ...
    pub fn standard(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::arg("vocabulary needs at least 2 symbols"));
        }
        let tokens = [BOS.to_owned(), EOS.to_owned()]
            .into_iter()
            .chain((0..size - 2).map(|i| format!("t{i}")))
            .collect();
        Self::new(tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bos(&self) -> TokenId {
        self.bos
    }

    pub fn eos(&self) -> TokenId {
        self.eos
    }

    pub fn symbols(&self) -> &[String] {
        &self.tokens
    }

    pub fn id(&self, symbol: &str) -> Result<TokenId> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::arg(format!("`{symbol}` is not in the vocabulary")))
    }

    pub fn ids<S: AsRef<str>>(&self, symbols: &[S]) -> Result<Vec<TokenId>> {
        symbols.iter().map(|s| self.id(s.as_ref())).collect()
    }

    pub fn symbol(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn check(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|&&t| t >= self.len()) {
            Some(t) => Err(Error::arg(format!(
                "token id {t} is outside a vocabulary of {}",
                self.len()
            ))),
            None => Ok(()),
        }
    }

    /// Ids of the symbols that are neither BOS nor EOS.
    pub fn content_ids(&self) -> Vec<TokenId> {
        (0..self.len())
            .filter(|&i| i != self.bos && i != self.eos)
            .collect()
    }
}

impl TryFrom<Vec<String>> for ToyVocab {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        Self::new(tokens)
    }
}

impl From<ToyVocab> for Vec<String> {
    fn from(v: ToyVocab) -> Self {
        v.tokens
    }
}

pub(crate) fn fnv1a(bytes: impl IntoIterator<Item = u8>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Maps free text onto the toy vocabulary by hashing lowercase words onto
/// the content symbols. Lossy by construction.
#[derive(Debug, Clone)]
pub struct HashEncoder {
    content: Vec<TokenId>,
    eos: TokenId,
    /// Longest response, not counting the trailing EOS.
    pub max_response_len: usize,
}

impl HashEncoder {
    pub fn new(vocab: &ToyVocab, max_response_len: usize) -> Result<Self> {
        let content = vocab.content_ids();
        if content.is_empty() {
            return Err(Error::arg("vocabulary has no content symbols to hash onto"));
        }
        if max_response_len == 0 {
            return Err(Error::arg("max_response_len must be positive"));
        }
        Ok(Self {
            content,
            eos: vocab.eos(),
            max_response_len,
        })
    }

    fn word(&self, w: &str) -> TokenId {
        let h = fnv1a(w.to_lowercase().into_bytes());
        self.content[(h % self.content.len() as u64) as usize]
    }

    pub fn prompt(&self, text: &str) -> Vec<TokenId> {
        text.split_whitespace().map(|w| self.word(w)).collect()
    }

    /// Truncated word ids followed by EOS.
    pub fn response(&self, text: &str) -> Vec<TokenId> {
        let mut ids: Vec<TokenId> = text
            .split_whitespace()
            .take(self.max_response_len)
            .map(|w| self.word(w))
            .collect();
        ids.push(self.eos);
        ids
    }

    pub fn sft_example(&self, example: &SftExample) -> TokenExample {
        TokenExample {
            prompt: self.prompt(&example.input),
            target: self.response(&example.target),
        }
    }

    pub fn preference_pair(&self, pair: &PreferencePair) -> TokenPair {
        TokenPair {
            prompt: self.prompt(&pair.x),
            chosen: self.response(&pair.chosen),
            rejected: self.response(&pair.rejected),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_vocab() {
        let v = ToyVocab::standard(16).unwrap();
        assert_eq!(v.len(), 16);
        assert_eq!(v.id("t13").unwrap(), 15);
        assert!(v.id("t14").is_err());
        assert_eq!(v.content_ids().len(), 14);
        assert!(ToyVocab::standard(1).is_err());
        assert!(ToyVocab::standard(65).is_err());
    }

    #[test]
    fn rejects_bad_symbol_tables() {
        let dup = vec![BOS.into(), EOS.into(), "x".into(), "x".into()];
        assert!(ToyVocab::new(dup).is_err());
        assert!(ToyVocab::new(vec![BOS.into(), "x".into()]).is_err());
    }

    #[test]
    fn serde_roundtrip_rebuilds_index() {
        let v = ToyVocab::standard(5).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"["<bos>","<eos>","t0","t1","t2"]"#);
        let back: ToyVocab = serde_json::from_str(&json).unwrap();
        assert_eq!(back.id("t2").unwrap(), 4);
    }

    #[test]
    fn hash_encoding() {
        let v = ToyVocab::standard(8).unwrap();
        let enc = HashEncoder::new(&v, 3).unwrap();
        let r = enc.response("One two three four five");
        assert_eq!(r.len(), 4);
        assert_eq!(*r.last().unwrap(), v.eos());
        assert_eq!(enc.prompt("Word word"), enc.prompt("word WORD"));
        assert!(r[..3].iter().all(|t| *t >= 2));
    }
}
