use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;

/// Record of one invocation, written to `<out>/manifest.json`.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub config: serde_json::Value,
    pub outputs: Vec<PathBuf>,
    pub started: String,
    pub finished: String,
    pub exit_code: u8,
}

pub struct Run {
    manifest: RunManifest,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Run {
    pub fn start(command: &str) -> Self {
        Run {
            manifest: RunManifest {
                command: command.to_string(),
                inputs: Vec::new(),
                config: serde_json::Value::Null,
                outputs: Vec::new(),
                started: now(),
                finished: String::new(),
                exit_code: 0,
            },
        }
    }

    pub fn input(&mut self, path: impl Into<PathBuf>) {
        self.manifest.inputs.push(path.into());
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.manifest.outputs.push(path.into());
    }

    pub fn config(&mut self, value: impl Serialize) {
        self.manifest.config = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
    }

    /// On failure the manifest is best effort: the output directory may be
    /// the thing that broke.
    pub fn finish(mut self, out: &Path, exit_code: u8) -> Result<()> {
        self.manifest.finished = now();
        self.manifest.exit_code = exit_code;
        if exit_code == 1 {
            self.manifest.outputs.clear();
            if out.is_dir() {
                let _ = write(out, &self.manifest);
            }
            return Ok(());
        }
        write(out, &self.manifest)
    }
}

fn write(out: &Path, manifest: &RunManifest) -> Result<()> {
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
