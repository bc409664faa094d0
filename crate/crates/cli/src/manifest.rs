//! Run manifests: a JSON record of every successful invocation, carrying
//! the exact arguments, seeds, and content hashes of all inputs and
//! outputs — enough to reproduce the run byte for byte. File-producing
//! commands write the record next to their primary output as
//! `<output>.run.json`; `search` prints it to standard error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::artifact::hash_file;
use crate::error::{io_at, CliError};

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    seeds: &'a [u64],
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
    duration_ms: u128,
}

/// Where the finished manifest goes.
pub enum Sink {
    /// Written as `<path>.run.json`.
    Beside(PathBuf),
    /// One line on standard error.
    Stderr,
}

/// Collects manifest fields while a command runs.
pub struct RunRecorder {
    command: String,
    argv: Vec<String>,
    seeds: Vec<u64>,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
    sink: Option<Sink>,
    started: Instant,
}

impl RunRecorder {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunRecorder {
            command: String::from(command),
            argv: argv.to_vec(),
            seeds: Vec::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            sink: None,
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) {
        self.seeds.push(seed);
    }

    /// Records an input file by its content hash.
    pub fn input_file(&mut self, path: &Path) -> Result<(), CliError> {
        let hash = hash_file(path)?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    /// Records an input with a precomputed hash (artifact directories).
    pub fn input_hash(&mut self, label: &Path, hash: &str) {
        self.inputs
            .insert(label.display().to_string(), String::from(hash));
    }

    pub fn output_file(&mut self, path: &Path) -> Result<(), CliError> {
        let hash = hash_file(path)?;
        self.outputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn output_hash(&mut self, label: &Path, hash: &str) {
        self.outputs
            .insert(label.display().to_string(), String::from(hash));
    }

    pub fn sink(&mut self, sink: Sink) {
        self.sink = Some(sink);
    }

    /// Writes the manifest to its sink. Commands that never set a sink
    /// emit nothing (they failed before producing output).
    pub fn emit(self) -> Result<(), CliError> {
        let Some(sink) = self.sink else {
            return Ok(());
        };
        let manifest = RunManifest {
            tool: "mpcs",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            argv: &self.argv,
            seeds: &self.seeds,
            inputs: &self.inputs,
            outputs: &self.outputs,
            duration_ms: self.started.elapsed().as_millis(),
        };
        let line = serde_json::to_string(&manifest)
            .map_err(|e| CliError::io(format!("serializing run manifest: {e}")))?;
        match sink {
            Sink::Beside(primary) => {
                let path = run_manifest_path(&primary);
                io_at(std::fs::write(&path, format!("{line}\n")), "writing", &path)
            }
            Sink::Stderr => {
                eprintln!("{line}");
                Ok(())
            }
        }
    }
}

/// The sibling path a manifest lands at for a given primary output.
pub fn run_manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary
        .file_name()
        .map_or_else(|| std::ffi::OsString::from("out"), |n| n.to_os_string());
    name.push(".run.json");
    primary.with_file_name(name)
}
