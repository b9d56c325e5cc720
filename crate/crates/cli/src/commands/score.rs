use std::collections::HashMap;
use std::path::PathBuf;

use serde::Serialize;
use sumread_core::interchange::OutputRecord;
use sumread_core::metrics::{
    aggregate, aggregate_against, score_row, CharCounter, ReportTable, ScoreOptions,
    WhitespaceCounter,
};
use sumread_core::prompting::PromptType;
use sumread_core::{AggregateReport, QaInstance, RecordError, ScoreRow};

use super::{required_path, write_records, write_text, Ctx};
use crate::args::ScoreArgs;
use crate::config::Tokenizer;
use crate::failure::{CmdResult, Failure};

#[derive(Serialize)]
struct ReportJson<'a> {
    model: &'a str,
    report: &'a AggregateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<(&'a str, &'a AggregateReport)>,
}

fn by_kind(records: Vec<OutputRecord>, kind: PromptType) -> HashMap<String, String> {
    records
        .into_iter()
        .filter(|r| r.kind == kind)
        .map(|r| (r.id, r.text))
        .collect()
}

pub fn score(args: ScoreArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let inst_path = required_path(
        args.instances,
        ctx.config.paths.instances.as_ref(),
        "instances",
    )?;
    let out_path = required_path(args.outputs, ctx.config.paths.outputs.as_ref(), "outputs")?;
    let instances: Vec<QaInstance> = ctx.read_items(&inst_path)?;
    let predictions = by_kind(ctx.read_items(&out_path)?, PromptType::Reader);
    if predictions.is_empty() {
        return Err(Failure::data(format!(
            "{}: no reader outputs to score",
            out_path.display()
        )));
    }
    let contexts = match &args.contexts {
        Some(p) => Some(by_kind(ctx.read_items(p)?, args.context_kind)),
        None => None,
    };

    let cfg = &ctx.config.score;
    let tokenizer = args
        .tokenizer
        .or(cfg.tokenizer)
        .unwrap_or(Tokenizer::Whitespace);
    let opts = ScoreOptions {
        counter: match tokenizer {
            Tokenizer::Whitespace => &WhitespaceCounter,
            Tokenizer::Chars => &CharCounter,
        },
        normalize_ira: !args.raw_ira && cfg.normalize_ira.unwrap_or(true),
        ira_selection: cfg.ira_selection.unwrap_or_default(),
    };

    let known: std::collections::HashSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    // outputs for instances removed by filtering are expected; just note them
    let stray = predictions
        .keys()
        .filter(|id| !known.contains(id.as_str()))
        .count();
    if stray > 0 {
        ctx.warn(format_args!(
            "{}: ignoring {stray} reader outputs with no matching instance",
            out_path.display()
        ));
    }

    let mut rows: Vec<ScoreRow> = Vec::with_capacity(instances.len());
    for inst in &instances {
        let Some(prediction) = predictions.get(&inst.id) else {
            ctx.record(&out_path, RecordError::for_id(&inst.id, "no reader output"))?;
            continue;
        };
        let context = match &contexts {
            Some(map) => match map.get(&inst.id) {
                Some(c) => c.as_str(),
                None => {
                    let src = args.contexts.as_deref().unwrap_or(&inst_path);
                    ctx.record(
                        src,
                        RecordError::for_id(&inst.id, format!("no {} context", args.context_kind)),
                    )?;
                    continue;
                }
            },
            None => inst.context.as_str(),
        };
        match score_row(&inst.id, prediction, &inst.answers, context, &opts) {
            Ok(r) => rows.push(r),
            Err(e) => ctx.record(&inst_path, RecordError::for_id(&inst.id, e.to_string()))?,
        }
    }
    if rows.is_empty() {
        return Err(Failure::data("no instance could be scored"));
    }

    let mut table = ReportTable::default();
    let baseline = match &args.baseline {
        Some(p) => {
            let base_rows: Vec<ScoreRow> = ctx.read_items(p)?;
            let base = aggregate(&base_rows).map_err(|e| Failure::data(e).context(p.display()))?;
            table.push(args.baseline_name.clone(), base.clone());
            Some(base)
        }
        None => None,
    };
    let report = match &baseline {
        Some(b) => aggregate_against(&rows, b)?,
        None => aggregate(&rows)?,
    };
    table.push(args.model.clone(), report.clone());

    let dir = args
        .out_dir
        .or_else(|| ctx.config.paths.reports.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    write_records(&dir.join("scores.jsonl"), &rows)?;
    let markdown = table.to_markdown();
    write_text(&dir.join("report.md"), &markdown)?;
    write_text(&dir.join("report.csv"), &table.to_csv())?;
    let json = ReportJson {
        model: &args.model,
        report: &report,
        baseline: baseline.as_ref().map(|b| (args.baseline_name.as_str(), b)),
    };
    let mut text = serde_json::to_string_pretty(&json).map_err(Failure::data)?;
    text.push('\n');
    write_text(&dir.join("report.json"), &text)?;

    ctx.say(format_args!("{markdown}"))?;
    ctx.say(format_args!(
        "scored {} of {} instances -> {}",
        rows.len(),
        instances.len(),
        dir.display()
    ))
}
