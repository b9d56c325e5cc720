use std::collections::HashMap;
use std::path::PathBuf;

use sumread_core::interchange::OutputRecord;
use sumread_core::prompting::{render_reader_prompt, render_summarizer_prompt, PromptType};
use sumread_core::{PromptRecord, QaInstance, RecordError};

use super::{required_path, write_records, Ctx};
use crate::args::PromptsArgs;
use crate::failure::CmdResult;

pub fn prompts(args: PromptsArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let path = required_path(
        args.instances,
        ctx.config.paths.instances.as_ref(),
        "instances",
    )?;
    let instances: Vec<QaInstance> = ctx.read_items(&path)?;

    let contexts: Option<HashMap<String, String>> = match &args.context_from {
        Some(p) => {
            let records: Vec<OutputRecord> = ctx.read_items(p)?;
            Some(
                records
                    .into_iter()
                    .filter(|r| r.kind == args.context_kind)
                    .map(|r| (r.id, r.text))
                    .collect(),
            )
        }
        None => None,
    };

    let mut out: Vec<PromptRecord> = Vec::with_capacity(instances.len() * args.types.len());
    for inst in &instances {
        for &kind in &args.types {
            let rendered = if kind == PromptType::Reader {
                let context = match &contexts {
                    Some(map) => match map.get(&inst.id) {
                        Some(c) => c.as_str(),
                        None => {
                            let src = args.context_from.as_deref().unwrap_or(&path);
                            ctx.record(
                                src,
                                RecordError::for_id(
                                    &inst.id,
                                    format!("no {} output to use as context", args.context_kind),
                                ),
                            )?;
                            continue;
                        }
                    },
                    None => inst.context.as_str(),
                };
                render_reader_prompt(&inst.id, &inst.question, context)
            } else {
                render_summarizer_prompt(inst, kind, args.answer_index)
            };
            match rendered {
                Ok(r) => out.push(r),
                Err(e) => ctx.record(&path, RecordError::for_id(&inst.id, e.to_string()))?,
            }
        }
    }

    let output = args
        .output
        .or_else(|| ctx.config.paths.prompts.clone())
        .unwrap_or_else(|| PathBuf::from("prompts.jsonl"));
    write_records(&output, &out)?;
    ctx.say(format_args!(
        "wrote {} prompts for {} instances -> {}",
        out.len(),
        instances.len(),
        output.display()
    ))
}
