//! Tables written as CSV or JSON, plus the run manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cli::{Common, Format};
use crate::error::CliError;

/// How child seeds derive from the master seed.
pub const SEED_SCHEME: &str =
    "splitmix64 counter split: child = derive_seed(master, index); decode trials use \
     derive_seed(derive_seed(master, rate_index), trial_index)";

/// Single writer for all tables of one command.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    command: &'static str,
    files: Vec<String>,
}

impl Sink {
    pub fn new(common: &Common, command: &'static str) -> Result<Self, CliError> {
        fs::create_dir_all(&common.out).map_err(CliError::io(&common.out))?;
        Ok(Self {
            dir: common.out.clone(),
            format: common.format,
            command,
            files: Vec::new(),
        })
    }

    /// Writes `rows` as `<name>.csv` or `<name>.json`.
    pub fn table<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let file = match self.format {
            Format::Csv => format!("{name}.csv"),
            Format::Json => format!("{name}.json"),
        };
        let path = self.dir.join(&file);
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
                for row in rows {
                    w.serialize(row).map_err(|e| csv_error(&path, e))?;
                }
                w.flush().map_err(CliError::io(&path))?;
            }
            Format::Json => write_json(&path, rows)?,
        }
        self.files.push(file);
        Ok(())
    }

    /// Writes `<command>.manifest.json` listing the configuration and outputs.
    pub fn finish<C: Serialize>(self, config: &C, seed: u64) -> Result<Vec<PathBuf>, CliError> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            seed_scheme: SEED_SCHEME,
            config,
            outputs: &self.files,
        };
        let path = self.dir.join(format!("{}.manifest.json", self.command));
        write_json(&path, &manifest)?;
        let mut written: Vec<PathBuf> = self.files.iter().map(|f| self.dir.join(f)).collect();
        written.push(path);
        Ok(written)
    }
}

#[derive(Serialize)]
struct Manifest<'a, C> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    seed_scheme: &'a str,
    config: &'a C,
    outputs: &'a [String],
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    w.write_all(b"\n").map_err(CliError::io(path))?;
    w.flush().map_err(CliError::io(path))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}
