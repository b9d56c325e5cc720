//! DPO objective numerics.
//!
//! The implicit reward of a response is `beta * (log pi(y|x) - log pi_ref(y|x))`
//! and the per-pair loss is `-log sigmoid(r_chosen - r_rejected)`. All
//! log-probabilities are natural logs.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interchange::LogprobRecord;

pub const DEFAULT_BETA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Chosen,
    Rejected,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Chosen => "chosen",
            Role::Rejected => "rejected",
        })
    }
}

/// How a response's token log-probabilities are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LengthNorm {
    /// Sum over tokens (the sequence likelihood).
    #[default]
    Sum,
    /// Mean over tokens; diagnostics only.
    Mean,
}

/// Per-token log-probabilities of one response under the policy and the
/// frozen reference model.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceLogprobs {
    pub id: String,
    pub role: Role,
    pub policy_logprobs: Vec<f64>,
    pub reference_logprobs: Vec<f64>,
}

fn check_token_logprobs(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::arg("empty log-probability list"));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v <= 0.0)) {
        return Err(Error::arg(format!(
            "token log-probability {bad} is not a finite value <= 0"
        )));
    }
    Ok(())
}

impl SequenceLogprobs {
    pub fn new(
        id: impl Into<String>,
        role: Role,
        policy: Vec<f64>,
        reference: Vec<f64>,
    ) -> Result<Self> {
        let s = Self {
            id: id.into(),
            role,
            policy_logprobs: policy,
            reference_logprobs: reference,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.policy_logprobs.len() != self.reference_logprobs.len() {
            return Err(Error::arg(format!(
                "{} {}: policy has {} tokens, reference has {}",
                self.id,
                self.role,
                self.policy_logprobs.len(),
                self.reference_logprobs.len()
            )));
        }
        check_token_logprobs(&self.policy_logprobs)?;
        check_token_logprobs(&self.reference_logprobs)
    }

    pub fn len(&self) -> usize {
        self.policy_logprobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policy_logprobs.is_empty()
    }

    /// Pooled (policy, reference) log-probabilities.
    pub fn pooled(&self, norm: LengthNorm) -> Result<(f64, f64)> {
        let p = sequence_logprob(&self.policy_logprobs)?;
        let r = sequence_logprob(&self.reference_logprobs)?;
        Ok(match norm {
            LengthNorm::Sum => (p, r),
            LengthNorm::Mean => {
                let n = self.len() as f64;
                (p / n, r / n)
            }
        })
    }
}

impl From<&SequenceLogprobs> for LogprobRecord {
    fn from(s: &SequenceLogprobs) -> Self {
        LogprobRecord {
            id: s.id.clone(),
            role: s.role,
            beta: None,
            policy_logprobs: s.policy_logprobs.clone(),
            reference_logprobs: s.reference_logprobs.clone(),
        }
    }
}

/// Sum of token log-probabilities, left to right.
pub fn sequence_logprob(per_token: &[f64]) -> Result<f64> {
    check_token_logprobs(per_token)?;
    Ok(per_token.iter().sum())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::arg(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

pub fn implicit_reward(policy_lp: f64, reference_lp: f64, beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(beta * (policy_lp - reference_lp))
}

/// Logistic function, evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `-log sigmoid(margin)`.
pub fn dpo_loss(margin: f64) -> f64 {
    softplus(-margin)
}

/// Gradient of [`dpo_loss`] with respect to (r_chosen, r_rejected).
pub fn dpo_loss_grad(margin: f64) -> (f64, f64) {
    let s = sigmoid(-margin);
    (-s, s)
}

/// Rewards of one preference pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardMargin {
    pub beta: f64,
    pub r_chosen: f64,
    pub r_rejected: f64,
    pub margin: f64,
}

impl RewardMargin {
    pub fn new(beta: f64, r_chosen: f64, r_rejected: f64) -> Self {
        Self {
            beta,
            r_chosen,
            r_rejected,
            margin: r_chosen - r_rejected,
        }
    }

    /// Rewards from pooled (policy, reference) log-probabilities.
    pub fn from_logprobs(beta: f64, chosen: (f64, f64), rejected: (f64, f64)) -> Result<Self> {
        Ok(Self::new(
            beta,
            implicit_reward(chosen.0, chosen.1, beta)?,
            implicit_reward(rejected.0, rejected.1, beta)?,
        ))
    }

    pub fn loss(&self) -> f64 {
        dpo_loss(self.margin)
    }
}

/// Token-level decomposition of the implicit reward.
pub fn per_token_rewards(sl: &SequenceLogprobs, beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    sl.validate()?;
    Ok(sl
        .policy_logprobs
        .iter()
        .zip(&sl.reference_logprobs)
        .map(|(p, r)| beta * (p - r))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub n_pairs: usize,
    pub mean_loss: f64,
    pub mean_margin: f64,
    pub preference_accuracy: f64,
}

impl LossReport {
    /// Reduces per-pair margins in the given order.
    pub fn from_margins(margins: &[f64]) -> Result<Self> {
        if margins.is_empty() {
            return Err(Error::arg("no preference pairs"));
        }
        let n = margins.len() as f64;
        let (mut loss, mut margin, mut wins) = (0.0, 0.0, 0usize);
        for &m in margins {
            loss += dpo_loss(m);
            margin += m;
            wins += usize::from(m > 0.0);
        }
        Ok(Self {
            n_pairs: margins.len(),
            mean_loss: loss / n,
            mean_margin: margin / n,
            preference_accuracy: wins as f64 / n,
        })
    }
}

pub fn pair_margin(
    chosen: &SequenceLogprobs,
    rejected: &SequenceLogprobs,
    beta: f64,
    norm: LengthNorm,
) -> Result<RewardMargin> {
    RewardMargin::from_logprobs(beta, chosen.pooled(norm)?, rejected.pooled(norm)?)
}

/// Mean DPO loss, mean margin and preference accuracy over a batch.
pub fn evaluate_pairs(
    batch: &[(SequenceLogprobs, SequenceLogprobs)],
    beta: f64,
    norm: LengthNorm,
) -> Result<LossReport> {
    check_beta(beta)?;
    let margins = batch
        .iter()
        .map(|(c, r)| pair_margin(c, r, beta, norm).map(|m| m.margin))
        .collect::<Result<Vec<_>>>()?;
    LossReport::from_margins(&margins)
}

/// Groups `logprobs.jsonl` records into (chosen, rejected) pairs by id,
/// ordered by id. Each id needs exactly one record of each role.
pub fn pair_records(
    records: &[(usize, LogprobRecord)],
) -> Result<Vec<(SequenceLogprobs, SequenceLogprobs)>> {
    let mut slots: BTreeMap<&str, (Option<SequenceLogprobs>, Option<SequenceLogprobs>)> =
        BTreeMap::new();
    for (line, rec) in records {
        let seq = SequenceLogprobs::new(
            rec.id.clone(),
            rec.role,
            rec.policy_logprobs.clone(),
            rec.reference_logprobs.clone(),
        )
        .map_err(|e| Error::Record(crate::error::RecordError::at_line(*line, e.to_string())))?;
        let entry = slots.entry(rec.id.as_str()).or_default();
        let slot = match rec.role {
            Role::Chosen => &mut entry.0,
            Role::Rejected => &mut entry.1,
        };
        if slot.replace(seq).is_some() {
            return Err(Error::Record(crate::error::RecordError::at_line(
                *line,
                format!("second {} record for id `{}`", rec.role, rec.id),
            )));
        }
    }
    slots
        .into_iter()
        .map(|(id, pair)| match pair {
            (Some(c), Some(r)) => Ok((c, r)),
            (None, _) => Err(Error::Record(crate::error::RecordError::for_id(
                id,
                "missing chosen record",
            ))),
            (_, None) => Err(Error::Record(crate::error::RecordError::for_id(
                id,
                "missing rejected record",
            ))),
        })
        .collect()
}

/// The single `beta` stated by the records, if any.
pub fn records_beta(records: &[(usize, LogprobRecord)]) -> Result<Option<f64>> {
    let mut found: Option<f64> = None;
    for (line, rec) in records {
        if let Some(b) = rec.beta {
            check_beta(b)?;
            match found {
                Some(prev) if prev != b => {
                    return Err(Error::Record(crate::error::RecordError::at_line(
                        *line,
                        format!("beta {b} disagrees with earlier beta {prev}"),
                    )))
                }
                _ => found = Some(b),
            }
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    fn seq(role: Role, p: &[f64], r: &[f64]) -> SequenceLogprobs {
        SequenceLogprobs::new("s", role, p.to_vec(), r.to_vec()).unwrap()
    }

    #[test]
    fn sequence_sums() {
        assert_eq!(sequence_logprob(&[-0.5]).unwrap(), -0.5);
        assert_eq!(sequence_logprob(&[-1.0, -2.0, -0.25]).unwrap(), -3.25);
        assert_eq!(sequence_logprob(&[0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(sequence_logprob(&[]).is_err());
        assert!(sequence_logprob(&[-1.0, 0.1]).is_err());
        assert!(sequence_logprob(&[f64::NAN]).is_err());
    }

    #[test]
    fn rewards() {
        assert_eq!(implicit_reward(-3.0, -3.0, 0.1).unwrap(), 0.0);
        assert!((implicit_reward(-5.0, -7.0, 0.1).unwrap() - 0.2).abs() < 1e-15);
        let a = implicit_reward(-5.0, -7.0, 0.1).unwrap();
        let b = implicit_reward(-5.0, -7.0, 0.2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-15);
        assert!(implicit_reward(0.0, 0.0, 0.0).is_err());
        assert!(implicit_reward(0.0, 0.0, -1.0).is_err());
    }

    #[test]
    fn loss_values() {
        assert!((dpo_loss(0.0) - LN2).abs() < 1e-12);
        assert!((dpo_loss(0.3) - 0.554_355_244_468_527_3).abs() < 1e-12);
        assert!(dpo_loss(50.0) < 1e-20 && dpo_loss(50.0) > 0.0);
        assert!((dpo_loss(-50.0) - 50.0).abs() < 1e-12);
        for m in [-700.0, -30.5, 30.5, 700.0] {
            assert!(dpo_loss(m).is_finite());
        }
    }

    #[test]
    fn grad_values() {
        assert_eq!(dpo_loss_grad(0.0), (-0.5, 0.5));
        let (a, b) = dpo_loss_grad(800.0);
        assert!(a.abs() < 1e-300 && b < 1e-300);
        assert_eq!(dpo_loss_grad(-800.0), (-1.0, 1.0));
    }

    #[test]
    fn token_rewards() {
        let s = seq(Role::Chosen, &[-1.0, -2.0], &[-1.0, -2.0]);
        assert_eq!(per_token_rewards(&s, 0.1).unwrap(), vec![0.0, 0.0]);

        let s = seq(Role::Chosen, &[-0.3, -1.7, -0.2], &[-0.9, -0.4, -0.05]);
        let total: f64 = per_token_rewards(&s, 0.5).unwrap().iter().sum();
        let whole = implicit_reward(
            sequence_logprob(&s.policy_logprobs).unwrap(),
            sequence_logprob(&s.reference_logprobs).unwrap(),
            0.5,
        )
        .unwrap();
        assert!((total - whole).abs() < 1e-12);

        let one = seq(Role::Rejected, &[-2.0], &[-1.5]);
        assert_eq!(
            per_token_rewards(&one, 0.1).unwrap(),
            vec![implicit_reward(-2.0, -1.5, 0.1).unwrap()]
        );
    }

    #[test]
    fn mismatched_lengths() {
        assert!(SequenceLogprobs::new("x", Role::Chosen, vec![-1.0], vec![-1.0, -2.0]).is_err());
    }

    #[test]
    fn batch_evaluation() {
        let zero = (
            seq(Role::Chosen, &[-1.0], &[-1.0]),
            seq(Role::Rejected, &[-2.0], &[-2.0]),
        );
        let r = evaluate_pairs(&[zero.clone(), zero], 0.1, LengthNorm::Sum).unwrap();
        assert!((r.mean_loss - LN2).abs() < 1e-15);
        assert_eq!(r.preference_accuracy, 0.0);

        // margin = 0.1 * ((-1 + 2) - (-3 + 1)) = 0.3
        let one = (
            seq(Role::Chosen, &[-1.0], &[-2.0]),
            seq(Role::Rejected, &[-3.0], &[-1.0]),
        );
        let r = evaluate_pairs(&[one], 0.1, LengthNorm::Sum).unwrap();
        assert!((r.mean_margin - 0.3).abs() < 1e-15);
        assert!((r.mean_loss - 0.554_355_244_468_527_3).abs() < 1e-12);
        assert_eq!(r.preference_accuracy, 1.0);

        assert!(evaluate_pairs(&[], 0.1, LengthNorm::Sum).is_err());
    }

    #[test]
    fn mean_pooling() {
        let c = seq(Role::Chosen, &[-1.0, -1.0], &[-2.0, -2.0]);
        let r = seq(Role::Rejected, &[-1.0], &[-1.0]);
        let sum = pair_margin(&c, &r, 1.0, LengthNorm::Sum).unwrap();
        let mean = pair_margin(&c, &r, 1.0, LengthNorm::Mean).unwrap();
        assert_eq!((sum.margin, mean.margin), (2.0, 1.0));
    }

    fn rec(id: &str, role: Role, beta: Option<f64>) -> LogprobRecord {
        LogprobRecord {
            id: id.into(),
            role,
            beta,
            policy_logprobs: vec![-1.0],
            reference_logprobs: vec![-1.0],
        }
    }

    #[test]
    fn record_pairing() {
        let recs = vec![
            (1, rec("b", Role::Rejected, None)),
            (2, rec("a", Role::Chosen, Some(0.2))),
            (3, rec("b", Role::Chosen, None)),
            (4, rec("a", Role::Rejected, Some(0.2))),
        ];
        let pairs = pair_records(&recs).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].0.id, "a");
        assert_eq!(records_beta(&recs).unwrap(), Some(0.2));

        let lonely = vec![(1, rec("a", Role::Chosen, None))];
        assert!(pair_records(&lonely).is_err());
        let clash = vec![
            (1, rec("a", Role::Chosen, Some(0.1))),
            (2, rec("a", Role::Rejected, Some(0.3))),
        ];
        assert!(records_beta(&clash).is_err());
    }
}
