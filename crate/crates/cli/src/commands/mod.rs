use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sumread_core::interchange::{read_jsonl, write_jsonl};
use sumread_core::{ErrorMode, RecordError};

use crate::config::PipelineConfig;
use crate::failure::{CmdResult, Failure};

mod dpo_eval;
mod ingest;
mod pairs;
mod prompts;
mod score;
mod toy;

pub use dpo_eval::dpo_eval;
pub use ingest::ingest;
pub use pairs::{pairs, validate_pairs};
pub use prompts::prompts;
pub use score::score;
pub use toy::{check_grad, train_toy};

/// State shared by every subcommand.
pub struct Ctx<'a> {
    pub config: PipelineConfig,
    pub mode: ErrorMode,
    pub out: &'a mut dyn Write,
    pub err: &'a mut dyn Write,
}

impl Ctx<'_> {
    /// Prints a skipped record or fails on it in strict mode.
    pub fn record(&mut self, file: &Path, err: RecordError) -> CmdResult {
        match self.mode {
            ErrorMode::Strict => {
                Err(Failure::from(sumread_core::Error::Record(err)).context(file.display()))
            }
            ErrorMode::Collect => {
                self.warn(format_args!("{}: {err} (skipped)", file.display()));
                Ok(())
            }
        }
    }

    pub fn warn(&mut self, msg: std::fmt::Arguments<'_>) {
        let _ = writeln!(self.err, "warning: {msg}");
    }

    pub fn say(&mut self, msg: std::fmt::Arguments<'_>) -> CmdResult {
        writeln!(self.out, "{msg}")?;
        Ok(())
    }

    /// Reads a JSONL file, reporting skipped lines on stderr.
    pub fn read_records<T: DeserializeOwned>(&mut self, path: &Path) -> CmdResult<Vec<(usize, T)>> {
        let file = File::open(path)
            .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
        let collected = read_jsonl(BufReader::new(file), self.mode)
            .map_err(|e| Failure::from(e).context(path.display()))?;
        for e in collected.errors {
            self.warn(format_args!("{}: {e} (skipped)", path.display()));
        }
        Ok(collected.items)
    }

    pub fn read_items<T: DeserializeOwned>(&mut self, path: &Path) -> CmdResult<Vec<T>> {
        Ok(self
            .read_records(path)?
            .into_iter()
            .map(|(_, t)| t)
            .collect())
    }
}

/// Flag value, then config value, then a usage error naming the flag.
pub fn required_path(
    flag: Option<PathBuf>,
    config: Option<&PathBuf>,
    name: &str,
) -> CmdResult<PathBuf> {
    flag.or_else(|| config.cloned())
        .ok_or_else(|| Failure::usage(format!("missing --{name} (or paths.{name} in the config)")))
}

fn create(path: &Path) -> CmdResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let f = File::create(path)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

pub fn write_records<'a, T: Serialize + 'a>(
    path: &Path,
    items: impl IntoIterator<Item = &'a T>,
) -> CmdResult {
    write_jsonl(create(path)?, items).map_err(|e| Failure::from(e).context(path.display()))
}

pub fn write_text(path: &Path, text: &str) -> CmdResult {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
