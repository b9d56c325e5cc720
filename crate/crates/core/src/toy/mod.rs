//! Desk-scale autoregressive policy trained with SFT and DPO.

mod checkpoint;
pub mod gradcheck;
mod policy;
mod train;
mod vocab;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use policy::{
    accumulate_logprob_grad, init_policy, logprob, prefix_logprob, touched_coordinates,
    PolicyParams, INIT_SCALE,
};
pub use train::{
    dpo_gradient, dpo_margins, dpo_objective, dpo_step, sft_gradient, sft_loss, sft_step,
    trace_to_csv, train, TokenExample, TokenPair, ToyDataset, TraceRow, TrainConfig, TrainMode,
};
pub use vocab::{HashEncoder, TokenId, ToyVocab, BOS, EOS, MAX_VOCAB};

/// Defaults of the toy setup.
pub const DEFAULT_VOCAB: usize = 16;
pub const DEFAULT_BUCKETS: usize = 64;
