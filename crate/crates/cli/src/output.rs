//! Output directory handling: atomic file writes and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `path` by filling a sibling temporary file and renaming it over
/// the destination, so readers never see a partial file. Missing parent
/// directories are created.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let name = path
        .file_name()
        .ok_or_else(|| CliError::input(format!("not a file path: {}", path.display())))?
        .to_string_lossy();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    }
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut out = BufWriter::new(File::create(&tmp)?);
        fill(&mut out)?;
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)?;
        out.write_all(b"\n")?;
        Ok(())
    })
}

/// Lowercase hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Run metadata written next to every command's outputs. Only this file
/// carries timestamps; the primary outputs are byte-reproducible.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub master_seed: Option<u64>,
    pub trial_seeds: Vec<u64>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub records: Value,
    pub results: Value,
    pub started_unix: u64,
    pub duration_seconds: f64,
}

/// Collects manifest fields while a command runs.
pub struct RunContext {
    pub output_dir: PathBuf,
    command: String,
    config: Value,
    started: Instant,
    started_unix: u64,
    pub master_seed: Option<u64>,
    pub trial_seeds: Vec<u64>,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    pub records: Value,
    pub results: Value,
}

impl RunContext {
    pub fn new<C: Serialize>(command: &str, config: &C, output_dir: &Path) -> Result<Self, CliError> {
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Ok(Self {
            output_dir: output_dir.to_path_buf(),
            command: command.to_string(),
            config: serde_json::to_value(config)?,
            started: Instant::now(),
            started_unix,
            master_seed: None,
            trial_seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            records: Value::Null,
            results: Value::Null,
        })
    }

    /// Records the digest of an input file.
    pub fn add_input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = sha256_file(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    /// Path of an output file inside the output directory, registered in the
    /// manifest.
    pub fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.output_dir.join(name)
    }

    pub fn finish(self) -> Result<(), CliError> {
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            master_seed: self.master_seed,
            trial_seeds: self.trial_seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            records: self.records,
            results: self.results,
            started_unix: self.started_unix,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        write_json(&self.output_dir.join(MANIFEST_FILE), &manifest)
    }
}
