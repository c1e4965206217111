//! Per-run output directory: data files plus one manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    subcommand: &'a str,
    status: &'a str,
    parameters: &'a Map<String, Value>,
    inputs: &'a [String],
    outputs: &'a [String],
    tool_version: &'a str,
    duration_seconds: f64,
}

pub struct Run {
    dir: PathBuf,
    subcommand: String,
    parameters: Map<String, Value>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    started: Instant,
}

impl Run {
    pub fn create(dir: &Path, subcommand: &str, parameters: Map<String, Value>) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            subcommand: subcommand.to_string(),
            parameters,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    /// Writes `name` (relative, may contain subdirectories) inside the run directory.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn manifest(&mut self, status: &str) -> Result<(), CliError> {
        let duration_seconds = self.started.elapsed().as_secs_f64();
        let m = Manifest {
            schema_version: SCHEMA_VERSION,
            subcommand: &self.subcommand,
            status,
            parameters: &self.parameters,
            inputs: &self.inputs,
            outputs: &self.outputs,
            tool_version: env!("CARGO_PKG_VERSION"),
            duration_seconds,
        };
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| CliError::Other(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn succeed(mut self) -> Result<(), CliError> {
        self.manifest("ok")
    }

    /// Writes the manifest and reports a solver failure (diagnostics are expected to be written already).
    pub fn fail(mut self, message: String) -> Result<(), CliError> {
        self.manifest("solver_failure")?;
        Err(CliError::Solver(message))
    }
}

/// JSON object describing a core error.
pub fn error_json(e: &hgl_core::Error) -> Value {
    serde_json::json!({ "kind": e.kind(), "message": e.to_string() })
}
