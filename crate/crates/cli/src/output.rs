//! Result sink: either a directory with CSV files and a manifest, or stdout.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub struct Output {
    dir: Option<PathBuf>,
    command: String,
    seed: Option<u64>,
    files: Vec<String>,
    summary: Map<String, Value>,
}

impl Output {
    pub fn new(dir: Option<PathBuf>, command: &str, seed: Option<u64>) -> CliResult<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
        }
        Ok(Output { dir, command: command.to_string(), seed, files: Vec::new(), summary: Map::new() })
    }

    /// Writes one named artifact. Without an output directory only the
    /// first (primary) artifact goes to stdout; the rest are dropped.
    pub fn write<F>(&mut self, name: &str, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut dyn Write) -> hymis::Result<()>,
    {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(file);
                f(&mut w)?;
                w.flush().map_err(|e| CliError::Io(e.to_string()))?;
            }
            None if self.files.is_empty() => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock)?;
            }
            None => {}
        }
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn summary(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("summary values serialize");
        self.summary.insert(key.to_string(), v);
    }

    /// Writes `manifest.json` when an output directory is set.
    pub fn finish(self) -> CliResult<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let manifest = serde_json::json!({
            "command": self.command,
            "seed": self.seed,
            "files": self.files,
            "summary": self.summary,
        });
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
