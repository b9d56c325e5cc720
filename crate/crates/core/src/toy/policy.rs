//! Tabular autoregressive policy.
//!
//! The next-token distribution is `softmax(logits[bucket][prev])`, where
//! `bucket` hashes the prompt tokens into one of `B` features and `prev` is
//! the previous response token (BOS at the first position). Every
//! parameter is a raw logit, so gradients are exact and cheap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::{fnv1a, TokenId, ToyVocab};
use crate::error::{Error, Result};

pub const INIT_SCALE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams {
    pub vocab: ToyVocab,
    pub buckets: usize,
    /// Row-major `[buckets][V][V]`.
    pub logits: Vec<f64>,
    pub seed: u64,
}

/// Seeded initialization, uniform in `[-0.01, 0.01]`.
pub fn init_policy(vocab: ToyVocab, buckets: usize, seed: u64) -> Result<PolicyParams> {
    let mut params = PolicyParams::zeros(vocab, buckets)?;
    params.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in &mut params.logits {
        *w = rng.random_range(-INIT_SCALE..=INIT_SCALE);
    }
    Ok(params)
}

pub(crate) fn log_softmax_into(row: &[f64], out: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    for (o, x) in out.iter_mut().zip(row) {
        *o = x - lse;
    }
}

impl PolicyParams {
    /// All-zero logits: every next-token distribution is uniform.
    pub fn zeros(vocab: ToyVocab, buckets: usize) -> Result<Self> {
        if vocab.len() < 2 {
            return Err(Error::arg("policy vocabulary needs at least 2 symbols"));
        }
        if buckets == 0 {
            return Err(Error::arg("policy needs at least one bucket"));
        }
        let v = vocab.len();
        Ok(Self {
            vocab,
            buckets,
            logits: vec![0.0; buckets * v * v],
            seed: 0,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn num_params(&self) -> usize {
        self.logits.len()
    }

    /// Offset of the logit row for (bucket, previous token).
    pub fn row_offset(&self, bucket: usize, prev: TokenId) -> usize {
        let v = self.vocab_size();
        (bucket * v + prev) * v
    }

    pub fn row(&self, bucket: usize, prev: TokenId) -> &[f64] {
        let off = self.row_offset(bucket, prev);
        &self.logits[off..off + self.vocab_size()]
    }

    pub fn bucket(&self, prompt: &[TokenId]) -> usize {
        let h = fnv1a(prompt.iter().flat_map(|t| (*t as u32).to_le_bytes()));
        (h % self.buckets as u64) as usize
    }

    /// Next-token probabilities for one conditioning row.
    pub fn next_token_probs(&self, bucket: usize, prev: TokenId) -> Vec<f64> {
        let mut lp = vec![0.0; self.vocab_size()];
        log_softmax_into(self.row(bucket, prev), &mut lp);
        lp.into_iter().map(f64::exp).collect()
    }

    fn check_pair(&self, prompt: &[TokenId], response: &[TokenId]) -> Result<()> {
        self.vocab.check(prompt)?;
        self.vocab.check(response)?;
        if response.last() != Some(&self.vocab.eos()) {
            return Err(Error::arg("response must end with <eos>"));
        }
        Ok(())
    }

    /// Stable content hash of the logits (bit-exact).
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.logits.iter().flat_map(|w| w.to_bits().to_le_bytes()))
    }

    pub fn all_finite(&self) -> bool {
        self.logits.iter().all(|w| w.is_finite())
    }
}

/// Log-probability of `response` given `prompt`: the total and its
/// per-token terms. `total` is the left-to-right sum of `per_token`.
pub fn logprob(
    params: &PolicyParams,
    prompt: &[TokenId],
    response: &[TokenId],
) -> Result<(f64, Vec<f64>)> {
    params.check_pair(prompt, response)?;
    prefix_logprob(params, prompt, response)
}

/// Like [`logprob`] but for an unfinished response (no trailing EOS needed).
pub fn prefix_logprob(
    params: &PolicyParams,
    prompt: &[TokenId],
    tokens: &[TokenId],
) -> Result<(f64, Vec<f64>)> {
    params.vocab.check(prompt)?;
    params.vocab.check(tokens)?;
    let response = tokens;
    let bucket = params.bucket(prompt);
    let mut lp = vec![0.0; params.vocab_size()];
    let mut prev = params.vocab.bos();
    let mut per_token = Vec::with_capacity(response.len());
    for &tok in response {
        log_softmax_into(params.row(bucket, prev), &mut lp);
        per_token.push(lp[tok]);
        prev = tok;
    }
    Ok((per_token.iter().sum(), per_token))
}

/// Adds `scale * d logprob(response | prompt) / d logits` into `grad`.
pub fn accumulate_logprob_grad(
    params: &PolicyParams,
    prompt: &[TokenId],
    response: &[TokenId],
    scale: f64,
    grad: &mut [f64],
) -> Result<()> {
    params.check_pair(prompt, response)?;
    let v = params.vocab_size();
    let bucket = params.bucket(prompt);
    let mut lp = vec![0.0; v];
    let mut prev = params.vocab.bos();
    for &tok in response {
        let off = params.row_offset(bucket, prev);
        log_softmax_into(&params.logits[off..off + v], &mut lp);
        for (j, l) in lp.iter().enumerate() {
            let indicator = if j == tok { 1.0 } else { 0.0 };
            grad[off + j] += scale * (indicator - l.exp());
        }
        prev = tok;
    }
    Ok(())
}

/// Flat indices of every logit the given (prompt, response) reads.
pub fn touched_coordinates(
    params: &PolicyParams,
    prompt: &[TokenId],
    response: &[TokenId],
) -> Vec<usize> {
    let v = params.vocab_size();
    let bucket = params.bucket(prompt);
    let mut prev = params.vocab.bos();
    let mut out = Vec::new();
    for &tok in response {
        let off = params.row_offset(bucket, prev);
        out.extend(off..off + v);
        prev = tok;
    }
    out
}
