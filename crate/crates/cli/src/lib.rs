//! Command-line front end: subcommands over the JSONL interchange files.

pub mod args;
pub mod commands;
pub mod config;
pub mod failure;

use std::io::Write;

use clap::Parser;
use sumread_core::ErrorMode;

use args::{Cli, Command};
use commands::Ctx;
use config::PipelineConfig;
use failure::{CmdResult, EXIT_OK, EXIT_RECORD, EXIT_USAGE};

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let strict = cli.strict;
    match execute(cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {f}");
            // record errors only escape collect mode when they are fatal
            if f.code == EXIT_RECORD && !strict {
                failure::EXIT_DATA
            } else {
                f.code
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let config = PipelineConfig::load(cli.config.as_deref())?;
    let strict = cli.strict || config.strict.unwrap_or(false);
    let mode = if strict {
        ErrorMode::Strict
    } else {
        ErrorMode::Collect
    };
    let mut ctx = Ctx {
        config,
        mode,
        out,
        err,
    };
    match cli.command {
        Command::Ingest(a) => commands::ingest(a, &mut ctx),
        Command::Prompts(a) => commands::prompts(a, &mut ctx),
        Command::Pairs(a) => commands::pairs(a, &mut ctx),
        Command::ValidatePairs(a) => commands::validate_pairs(a, &mut ctx),
        Command::Score(a) => commands::score(a, &mut ctx),
        Command::TrainToy(a) => commands::train_toy(a, &mut ctx),
        Command::CheckGrad(a) => commands::check_grad(a, &mut ctx),
        Command::DpoEval(a) => commands::dpo_eval(a, &mut ctx),
    }
}
