use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use sumread_core::corpus::{
    filter_answer_in_context, parse_retrieved, parse_squad, split_dataset, FilterOptions,
};
use sumread_core::CorpusStats;

use super::{write_records, Ctx};
use crate::args::{IngestArgs, InputFormat};
use crate::failure::{CmdResult, Failure};

pub fn ingest(args: IngestArgs, ctx: &mut Ctx<'_>) -> CmdResult {
    let open_err =
        |e: std::io::Error| Failure::data(format!("cannot read {}: {e}", args.input.display()));
    let collected = match args.format {
        InputFormat::Squad => {
            let bytes = std::fs::read(&args.input).map_err(open_err)?;
            parse_squad(&bytes, args.split, ctx.mode)
        }
        InputFormat::Retrieved => {
            let file = File::open(&args.input).map_err(open_err)?;
            parse_retrieved(BufReader::new(file), args.split, ctx.mode)
        }
    }
    .map_err(|e| Failure::from(e).context(args.input.display()))?;
    for e in &collected.errors {
        ctx.warn(format_args!("{}: {e} (skipped)", args.input.display()));
    }

    let mut instances = collected.items;
    let stats = if args.filter {
        let cfg = &ctx.config.ingest;
        let normalize = if args.raw {
            false
        } else {
            args.normalize || cfg.normalize.unwrap_or(true)
        };
        let selection = if args.any_answer {
            sumread_core::metrics::AnswerSelection::Any
        } else {
            cfg.answer_selection.unwrap_or_default()
        };
        let (kept, stats) = filter_answer_in_context(
            instances,
            FilterOptions {
                normalize,
                selection,
            },
        );
        instances = kept;
        stats
    } else {
        CorpusStats::new(Some(args.split), instances.len(), instances.len())
    };
    ctx.say(format_args!("{stats}"))?;
    if !collected.errors.is_empty() {
        ctx.say(format_args!("record_errors={}", collected.errors.len()))?;
    }

    if let Some(ratios) = args.ratios.or(ctx.config.ingest.ratios) {
        let seed = args.seed.or(ctx.config.seed).unwrap_or(0);
        let set = split_dataset(instances, ratios, seed).map_err(Failure::usage)?;
        for (name, part) in [
            ("train", &set.train),
            ("validation", &set.validation),
            ("test", &set.test),
        ] {
            let path = args.out_dir.join(format!("{name}.jsonl"));
            write_records(&path, part)?;
            ctx.say(format_args!("{name}={} -> {}", part.len(), path.display()))?;
        }
        return Ok(());
    }

    let output = args
        .output
        .or_else(|| ctx.config.paths.instances.clone())
        .unwrap_or_else(|| PathBuf::from("instances.jsonl"));
    write_records(&output, &instances)?;
    ctx.say(format_args!(
        "wrote {} instances -> {}",
        instances.len(),
        output.display()
    ))
}
