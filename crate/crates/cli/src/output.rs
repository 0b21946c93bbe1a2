use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{CliError, CliResult};

/// 17 significant digits; parses back to the identical double.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |source| CliError::Csv {
        path: PathBuf::from("<buffer>"),
        source,
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row).map_err(wrap)?;
    }
    w.into_inner().map_err(|e| CliError::Validation(format!("flushing CSV: {e}")))
}

pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn manifest_path(path: &Path) -> PathBuf {
    sidecar(path, ".manifest.json")
}

pub fn truncation_path(path: &Path) -> PathBuf {
    sidecar(path, ".truncation.json")
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct OutputEntry {
    path: PathBuf,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a [String],
    config: &'a Value,
    version: &'static str,
    wall_time_seconds: f64,
    outputs: &'a [OutputEntry],
}

/// Collects written files so that one manifest can list them all.
pub struct Run {
    argv: Vec<String>,
    started: Instant,
    outputs: Vec<OutputEntry>,
}

impl Run {
    pub fn new(argv: Vec<String>) -> Self {
        Self {
            argv,
            started: Instant::now(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> CliResult<()> {
        std::fs::write(path, bytes).map_err(CliError::io(path))?;
        self.outputs.push(OutputEntry {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes to `out`, or to stdout when no path is given; only files get
    /// a manifest.
    pub fn emit(mut self, out: Option<&Path>, bytes: &[u8], extra: &[(PathBuf, Vec<u8>)], config: Value) -> CliResult<()> {
        match out {
            Some(path) => {
                self.write(path, bytes)?;
                for (p, b) in extra {
                    self.write(p, b)?;
                }
                self.finish(path, config)
            }
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(CliError::io("<stdout>"))
            }
        }
    }

    pub fn finish(self, primary: &Path, config: Value) -> CliResult<()> {
        let manifest = RunManifest {
            command: &self.argv,
            config: &config,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            outputs: &self.outputs,
        };
        let path = manifest_path(primary);
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(|source| CliError::Json {
            path: path.clone(),
            source,
        })?;
        text.push(b'\n');
        std::fs::write(&path, text).map_err(CliError::io(&path))
    }
}
