use serde::Serialize;
use sumread_core::dpo::{evaluate_pairs, pair_records, records_beta, LengthNorm, DEFAULT_BETA};
use sumread_core::{LogprobRecord, LossReport};

use super::{required_path, write_text, Ctx};
use crate::args::{DpoEvalArgs, LengthNormArg};
use crate::failure::{CmdResult, Failure};

#[derive(Serialize)]
struct DpoEval {
    #[serde(flatten)]
    report: LossReport,
    beta: f64,
    length_norm: &'static str,
    records: usize,
}

pub fn dpo_eval(args: DpoEvalArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let path = required_path(
        args.logprobs,
        ctx.config.paths.logprobs.as_ref(),
        "logprobs",
    )?;
    let records: Vec<(usize, LogprobRecord)> = ctx.read_records(&path)?;
    if records.is_empty() {
        return Err(Failure::data(format!(
            "{}: no log-probability records",
            path.display()
        )));
    }
    let in_file = records_beta(&records).map_err(|e| Failure::from(e).context(path.display()))?;
    let beta = args
        .beta
        .or(ctx.config.beta)
        .or(in_file)
        .unwrap_or(DEFAULT_BETA);
    if let (Some(file_beta), true) = (in_file, args.beta.is_some() || ctx.config.beta.is_some()) {
        if file_beta != beta {
            ctx.warn(format_args!(
                "using beta {beta}; the records state {file_beta}"
            ));
        }
    }
    let (norm, norm_name) = match args.length_norm {
        LengthNormArg::Sum => (LengthNorm::Sum, "sum"),
        LengthNormArg::Mean => (LengthNorm::Mean, "mean"),
    };
    let pairs = pair_records(&records).map_err(|e| Failure::from(e).context(path.display()))?;
    let report = evaluate_pairs(&pairs, beta, norm).map_err(Failure::usage)?;
    let eval = DpoEval {
        report,
        beta,
        length_norm: norm_name,
        records: records.len(),
    };
    let mut text = serde_json::to_string_pretty(&eval).map_err(Failure::data)?;
    text.push('\n');
    write_text(&args.output, &text)?;
    ctx.say(format_args!(
        "pairs={} mean_loss={:.12} mean_margin={:.6} preference_accuracy={:.4} beta={} -> {}",
        report.n_pairs,
        report.mean_loss,
        report.mean_margin,
        report.preference_accuracy,
        beta,
        args.output.display()
    ))
}
