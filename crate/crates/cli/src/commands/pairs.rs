use std::path::PathBuf;

use sumread_core::interchange::OutputRecord;
use sumread_core::pairbuilder::{
    build_dpo_dataset, build_sft_dataset, validate_pairs as check_pairs, OutputTable,
};
use sumread_core::{PreferencePair, QaInstance};

use super::{required_path, write_records, Ctx};
use crate::args::{PairsArgs, PairsKind, ValidatePairsArgs};
use crate::failure::{CmdResult, Failure};

pub fn pairs(args: PairsArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let inst_path = required_path(
        args.instances,
        ctx.config.paths.instances.as_ref(),
        "instances",
    )?;
    let out_path = required_path(args.outputs, ctx.config.paths.outputs.as_ref(), "outputs")?;
    let instances: Vec<QaInstance> = ctx.read_items(&inst_path)?;
    let records: Vec<OutputRecord> = ctx.read_items(&out_path)?;
    let table = OutputTable::from_records(&records)
        .map_err(|e| Failure::data(e).context(out_path.display()))?;

    let (written, stats, output) = match args.kind {
        PairsKind::Sft => {
            let (examples, stats) = build_sft_dataset(&instances, &table);
            let output = args.output.unwrap_or_else(|| PathBuf::from("sft.jsonl"));
            write_records(&output, &examples)?;
            (examples.len(), stats, output)
        }
        PairsKind::Dpo => {
            let (pairs, stats) = build_dpo_dataset(&instances, &table, args.variant);
            let output = args.output.unwrap_or_else(|| PathBuf::from("pairs.jsonl"));
            write_records(&output, &pairs)?;
            (pairs.len(), stats, output)
        }
    };
    ctx.say(format_args!("{stats}"))?;
    ctx.say(format_args!(
        "wrote {written} records -> {}",
        output.display()
    ))
}

pub fn validate_pairs(args: ValidatePairsArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let file = std::fs::File::open(&args.pairs)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", args.pairs.display())))?;
    // malformed lines always count against validity
    let collected = sumread_core::interchange::read_jsonl::<PreferencePair, _>(
        std::io::BufReader::new(file),
        ctx.mode,
    )
    .map_err(|e| Failure::from(e).context(args.pairs.display()))?;
    let report = check_pairs(&collected.items);
    write!(ctx.out, "{report}")?;
    for e in &collected.errors {
        ctx.say(format_args!("{e}"))?;
    }
    let problems = report.duplicate_ids.len()
        + report.empty_fields.len()
        + report.identical_pairs.len()
        + report.prompt_shape.len()
        + collected.errors.len();
    ctx.say(format_args!(
        "checked={} problems={problems}",
        report.checked + collected.errors.len()
    ))?;
    if problems > 0 {
        return Err(Failure::data(format!(
            "{} failed validation",
            args.pairs.display()
        )));
    }
    Ok(())
}
