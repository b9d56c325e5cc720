//! SFT and DPO objectives, their analytic gradients, and the training loop.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::policy::{accumulate_logprob_grad, logprob, PolicyParams};
use super::vocab::TokenId;
use crate::dpo::{sigmoid, LossReport, DEFAULT_BETA};
use crate::error::{Error, Result};

/// Token-level SFT example: learn `target` given `prompt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenExample {
    pub prompt: Vec<TokenId>,
    pub target: Vec<TokenId>,
}

/// Token-level preference pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPair {
    pub prompt: Vec<TokenId>,
    pub chosen: Vec<TokenId>,
    pub rejected: Vec<TokenId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Sft,
    Dpo,
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TrainMode::Sft => "sft",
            TrainMode::Dpo => "dpo",
        })
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sft" => Ok(TrainMode::Sft),
            "dpo" => Ok(TrainMode::Dpo),
            other => Err(Error::arg(format!("unknown training mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToyDataset {
    Sft(Vec<TokenExample>),
    Dpo(Vec<TokenPair>),
}

impl ToyDataset {
    pub fn mode(&self) -> TrainMode {
        match self {
            ToyDataset::Sft(_) => TrainMode::Sft,
            ToyDataset::Dpo(_) => TrainMode::Dpo,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ToyDataset::Sft(x) => x.len(),
            ToyDataset::Dpo(x) => x.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub beta: f64,
    pub seed: u64,
    pub mode: TrainMode,
    /// Examples per step; `None` uses the whole dataset every step.
    #[serde(default)]
    pub batch_size: Option<usize>,
}

impl TrainConfig {
    pub fn sft() -> Self {
        Self {
            learning_rate: 0.1,
            steps: 500,
            beta: DEFAULT_BETA,
            seed: 0,
            mode: TrainMode::Sft,
            batch_size: None,
        }
    }

    pub fn dpo() -> Self {
        Self {
            learning_rate: 0.05,
            mode: TrainMode::Dpo,
            ..Self::sft()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::arg("learning_rate must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::arg("steps must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::arg("beta must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::arg("batch_size must be positive"));
        }
        Ok(())
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::arg(format!(
            "learning rate {lr} must be finite and non-negative"
        )));
    }
    Ok(())
}

fn check_reference(params: &PolicyParams, reference: &PolicyParams) -> Result<()> {
    if params.vocab != reference.vocab || params.buckets != reference.buckets {
        return Err(Error::arg("reference policy has a different shape"));
    }
    Ok(())
}

fn apply(params: &mut PolicyParams, grad: &[f64], lr: f64) {
    for (w, g) in params.logits.iter_mut().zip(grad) {
        *w -= lr * g;
    }
}

/// Mean negative log-likelihood of the targets.
pub fn sft_loss(params: &PolicyParams, batch: &[TokenExample]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::arg("empty SFT batch"));
    }
    let mut total = 0.0;
    for ex in batch {
        total -= logprob(params, &ex.prompt, &ex.target)?.0;
    }
    Ok(total / batch.len() as f64)
}

/// Mean NLL and its gradient.
pub fn sft_gradient(params: &PolicyParams, batch: &[TokenExample]) -> Result<(f64, Vec<f64>)> {
    let nll = sft_loss(params, batch)?;
    let mut grad = vec![0.0; params.num_params()];
    let scale = -1.0 / batch.len() as f64;
    for ex in batch {
        accumulate_logprob_grad(params, &ex.prompt, &ex.target, scale, &mut grad)?;
    }
    Ok((nll, grad))
}

/// One gradient-descent step on mean NLL; returns the pre-step NLL.
pub fn sft_step(params: &mut PolicyParams, batch: &[TokenExample], lr: f64) -> Result<f64> {
    check_lr(lr)?;
    let (nll, grad) = sft_gradient(params, batch)?;
    apply(params, &grad, lr);
    Ok(nll)
}

/// Per-pair reward margins of `params` against the frozen `reference`.
pub fn dpo_margins(
    params: &PolicyParams,
    reference: &PolicyParams,
    batch: &[TokenPair],
    beta: f64,
) -> Result<Vec<f64>> {
    check_reference(params, reference)?;
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::arg("beta must be positive"));
    }
    batch
        .iter()
        .map(|p| {
            let w = logprob(params, &p.prompt, &p.chosen)?.0
                - logprob(reference, &p.prompt, &p.chosen)?.0;
            let l = logprob(params, &p.prompt, &p.rejected)?.0
                - logprob(reference, &p.prompt, &p.rejected)?.0;
            Ok(beta * w - beta * l)
        })
        .collect()
}

/// Mean DPO loss, margin and preference accuracy.
pub fn dpo_objective(
    params: &PolicyParams,
    reference: &PolicyParams,
    batch: &[TokenPair],
    beta: f64,
) -> Result<LossReport> {
    if batch.is_empty() {
        return Err(Error::arg("empty DPO batch"));
    }
    LossReport::from_margins(&dpo_margins(params, reference, batch, beta)?)
}

/// DPO objective and the gradient of its mean loss.
pub fn dpo_gradient(
    params: &PolicyParams,
    reference: &PolicyParams,
    batch: &[TokenPair],
    beta: f64,
) -> Result<(LossReport, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::arg("empty DPO batch"));
    }
    let margins = dpo_margins(params, reference, batch, beta)?;
    let n = batch.len() as f64;
    let mut grad = vec![0.0; params.num_params()];
    for (pair, &m) in batch.iter().zip(&margins) {
        // d loss / d margin = -sigmoid(-m); d margin / d logp(chosen) = beta
        let coeff = -sigmoid(-m) * beta / n;
        accumulate_logprob_grad(params, &pair.prompt, &pair.chosen, coeff, &mut grad)?;
        accumulate_logprob_grad(params, &pair.prompt, &pair.rejected, -coeff, &mut grad)?;
    }
    Ok((LossReport::from_margins(&margins)?, grad))
}

/// One descent step on the mean DPO loss; returns pre-step metrics.
/// `reference` is only read.
pub fn dpo_step(
    params: &mut PolicyParams,
    reference: &PolicyParams,
    batch: &[TokenPair],
    beta: f64,
    lr: f64,
) -> Result<LossReport> {
    check_lr(lr)?;
    let (report, grad) = dpo_gradient(params, reference, batch, beta)?;
    apply(params, &grad, lr);
    Ok(report)
}

/// Metrics over the full dataset before step `step` (the last row is after
/// the final update).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub loss: f64,
    pub margin: Option<f64>,
    pub accuracy: Option<f64>,
}

pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("step,loss,margin,accuracy\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in trace {
        let _ = writeln!(
            out,
            "{},{:.17e},{},{}",
            r.step,
            r.loss,
            opt(r.margin),
            opt(r.accuracy)
        );
    }
    out
}

fn pick<T: Clone>(data: &[T], batch_size: Option<usize>, rng: &mut ChaCha8Rng) -> Option<Vec<T>> {
    match batch_size {
        Some(k) if k < data.len() => Some(
            sample(rng, data.len(), k)
                .into_iter()
                .map(|i| data[i].clone())
                .collect(),
        ),
        _ => None,
    }
}

/// Trains `params` on `dataset`. DPO uses a frozen copy of the starting
/// parameters as reference. Deterministic for a fixed config.
pub fn train(
    mut params: PolicyParams,
    config: &TrainConfig,
    dataset: &ToyDataset,
) -> Result<(PolicyParams, Vec<TraceRow>)> {
    config.validate()?;
    if dataset.mode() != config.mode {
        return Err(Error::arg(format!(
            "{} config given a {} dataset",
            config.mode,
            dataset.mode()
        )));
    }
    if dataset.is_empty() {
        return Err(Error::arg("empty training dataset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::with_capacity(config.steps + 1);
    match dataset {
        ToyDataset::Sft(data) => {
            for step in 0..=config.steps {
                let (loss, grad) = sft_gradient(&params, data)?;
                trace.push(TraceRow {
                    step,
                    loss,
                    margin: None,
                    accuracy: None,
                });
                if step == config.steps {
                    break;
                }
                match pick(data, config.batch_size, &mut rng) {
                    Some(batch) => {
                        sft_step(&mut params, &batch, config.learning_rate)?;
                    }
                    None => apply(&mut params, &grad, config.learning_rate),
                }
            }
        }
        ToyDataset::Dpo(data) => {
            let reference = params.clone();
            for step in 0..=config.steps {
                let (report, grad) = dpo_gradient(&params, &reference, data, config.beta)?;
                trace.push(TraceRow {
                    step,
                    loss: report.mean_loss,
                    margin: Some(report.mean_margin),
                    accuracy: Some(report.preference_accuracy),
                });
                if step == config.steps {
                    break;
                }
                match pick(data, config.batch_size, &mut rng) {
                    Some(batch) => {
                        dpo_step(
                            &mut params,
                            &reference,
                            &batch,
                            config.beta,
                            config.learning_rate,
                        )?;
                    }
                    None => apply(&mut params, &grad, config.learning_rate),
                }
            }
        }
    }
    Ok((params, trace))
}
