use std::fs::File;
use std::io::BufReader;

use serde::Serialize;
use sumread_core::bundled;
use sumread_core::toy::gradcheck::{check_gradient, sample_coordinates};
use sumread_core::toy::{
    dpo_gradient, dpo_objective, init_policy, read_checkpoint, sft_gradient, sft_loss,
    touched_coordinates, trace_to_csv, train, write_checkpoint, HashEncoder, PolicyParams,
    ToyDataset, ToyVocab, TrainConfig, TrainMode, DEFAULT_BUCKETS, DEFAULT_VOCAB,
};
use sumread_core::{PreferencePair, SftExample};

use super::{write_text, Ctx};
use crate::args::{CheckGradArgs, ToyModelArgs, TrainToyArgs};
use crate::failure::{CmdResult, Failure};

const DEFAULT_MAX_RESPONSE_LEN: usize = 16;

struct ToySetup {
    vocab: ToyVocab,
    buckets: usize,
    seed: u64,
    beta: f64,
    dataset: ToyDataset,
}

fn setup(args: &ToyModelArgs, ctx: &mut Ctx<'_>) -> CmdResult<ToySetup> {
    let cfg = &ctx.config.train;
    let vocab = ToyVocab::standard(args.vocab_size.or(cfg.vocab_size).unwrap_or(DEFAULT_VOCAB))
        .map_err(Failure::usage)?;
    let buckets = args.buckets.or(cfg.buckets).unwrap_or(DEFAULT_BUCKETS);
    let max_len = args
        .max_response_len
        .or(cfg.max_response_len)
        .unwrap_or(DEFAULT_MAX_RESPONSE_LEN);
    let seed = args.seed.or(ctx.config.seed).unwrap_or(0);
    let beta = args
        .beta
        .or(ctx.config.beta)
        .unwrap_or(sumread_core::dpo::DEFAULT_BETA);
    let encoder = HashEncoder::new(&vocab, max_len).map_err(Failure::usage)?;

    let dataset = match (args.mode, &args.data) {
        (TrainMode::Dpo, None) => {
            ToyDataset::Dpo(bundled::separable_pairs(&vocab).map_err(Failure::usage)?)
        }
        (TrainMode::Sft, None) => ToyDataset::Sft(
            bundled::micro_sft_examples()?
                .iter()
                .map(|e| encoder.sft_example(e))
                .collect(),
        ),
        (TrainMode::Dpo, Some(p)) => {
            let pairs: Vec<PreferencePair> = ctx.read_items(p)?;
            ToyDataset::Dpo(pairs.iter().map(|e| encoder.preference_pair(e)).collect())
        }
        (TrainMode::Sft, Some(p)) => {
            let examples: Vec<SftExample> = ctx.read_items(p)?;
            ToyDataset::Sft(examples.iter().map(|e| encoder.sft_example(e)).collect())
        }
    };
    if dataset.is_empty() {
        return Err(Failure::data("no training examples"));
    }
    Ok(ToySetup {
        vocab,
        buckets,
        seed,
        beta,
        dataset,
    })
}

pub fn train_toy(args: TrainToyArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let s = setup(&args.model, ctx)?;
    let cfg = &ctx.config.train;
    let defaults = match args.model.mode {
        TrainMode::Sft => TrainConfig::sft(),
        TrainMode::Dpo => TrainConfig::dpo(),
    };
    let config = TrainConfig {
        learning_rate: args
            .lr
            .or(cfg.learning_rate)
            .unwrap_or(defaults.learning_rate),
        steps: args.steps.or(cfg.steps).unwrap_or(defaults.steps),
        beta: s.beta,
        seed: s.seed,
        mode: args.model.mode,
        batch_size: args.batch_size.or(cfg.batch_size),
    };
    config.validate().map_err(Failure::usage)?;

    let params = match &args.init {
        Some(p) => {
            let f = File::open(p)
                .map_err(|e| Failure::data(format!("cannot open {}: {e}", p.display())))?;
            read_checkpoint(BufReader::new(f)).map_err(|e| Failure::from(e).context(p.display()))?
        }
        None => init_policy(s.vocab, s.buckets, s.seed).map_err(Failure::usage)?,
    };
    let (trained, trace) = train(params, &config, &s.dataset).map_err(Failure::usage)?;

    let mut buf = Vec::new();
    write_checkpoint(&trained, &mut buf)?;
    write_text(
        &args.checkpoint,
        std::str::from_utf8(&buf).expect("checkpoint JSON is UTF-8"),
    )?;
    write_text(&args.trace, &trace_to_csv(&trace))?;

    let (first, last) = (trace[0], trace[trace.len() - 1]);
    ctx.say(format_args!(
        "mode={} examples={} steps={} lr={} loss {:.6} -> {:.6}",
        config.mode,
        s.dataset.len(),
        config.steps,
        config.learning_rate,
        first.loss,
        last.loss
    ))?;
    if let (Some(m0), Some(m1), Some(acc)) = (first.margin, last.margin, last.accuracy) {
        ctx.say(format_args!("margin {m0:.6} -> {m1:.6} accuracy {acc:.4}"))?;
    }
    ctx.say(format_args!(
        "checkpoint -> {}  trace -> {}",
        args.checkpoint.display(),
        args.trace.display()
    ))
}

#[derive(Serialize)]
struct GradLine {
    mode: TrainMode,
    coordinates: usize,
    max_rel_error: f64,
    max_abs_error: f64,
    tolerance: f64,
    passed: bool,
}

pub fn check_grad(args: CheckGradArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let s = setup(&args.model, ctx)?;
    if !(args.step > 0.0 && args.tol > 0.0) {
        return Err(Failure::usage("--step and --tol must be positive"));
    }
    let reference = init_policy(s.vocab, s.buckets, s.seed).map_err(Failure::usage)?;
    // a few warm-up steps move the policy off the symmetric starting point
    let warmup = TrainConfig {
        learning_rate: 0.5,
        steps: 3,
        beta: s.beta,
        seed: s.seed,
        mode: args.model.mode,
        batch_size: None,
    };
    let (policy, _) = train(reference.clone(), &warmup, &s.dataset).map_err(Failure::usage)?;

    let report = match &s.dataset {
        ToyDataset::Sft(data) => {
            let (_, grad) = sft_gradient(&policy, data)?;
            let touched = data
                .iter()
                .flat_map(|e| touched_coordinates(&policy, &e.prompt, &e.target))
                .collect();
            let coords = sample_coordinates(touched, args.coords, s.seed);
            check_gradient(
                &policy,
                &grad,
                |p: &PolicyParams| sft_loss(p, data),
                &coords,
                args.step,
            )?
        }
        ToyDataset::Dpo(data) => {
            let (_, grad) = dpo_gradient(&policy, &reference, data, s.beta)?;
            let touched = data
                .iter()
                .flat_map(|e| {
                    let mut c = touched_coordinates(&policy, &e.prompt, &e.chosen);
                    c.extend(touched_coordinates(&policy, &e.prompt, &e.rejected));
                    c
                })
                .collect();
            let coords = sample_coordinates(touched, args.coords, s.seed);
            check_gradient(
                &policy,
                &grad,
                |p: &PolicyParams| Ok(dpo_objective(p, &reference, data, s.beta)?.mean_loss),
                &coords,
                args.step,
            )?
        }
    };
    let line = GradLine {
        mode: args.model.mode,
        coordinates: report.coordinates,
        max_rel_error: report.max_rel_error,
        max_abs_error: report.max_abs_error,
        tolerance: args.tol,
        passed: report.passes(args.tol),
    };
    ctx.say(format_args!(
        "max_rel_error={:.3e} max_abs_error={:.3e} coordinates={} tol={:e} {}",
        line.max_rel_error,
        line.max_abs_error,
        line.coordinates,
        line.tolerance,
        if line.passed { "PASS" } else { "FAIL" }
    ))?;
    ctx.say(format_args!(
        "{}",
        serde_json::to_string(&line).map_err(Failure::data)?
    ))?;
    if !line.passed {
        return Err(Failure::check(format!(
            "gradient check failed: max relative error {:e} above {:e}",
            line.max_rel_error, line.tolerance
        )));
    }
    Ok(())
}
