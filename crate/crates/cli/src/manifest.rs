use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::io::{sha256_file, write_json};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    fn of(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Provenance record written next to every artifact.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub subcommand: String,
    pub params: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub wall_clock_s: f64,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub struct Recorder {
    subcommand: String,
    params: serde_json::Value,
    inputs: Vec<PathBuf>,
    started: Instant,
}

impl Recorder {
    pub fn start(subcommand: &str, params: &impl Serialize) -> Result<Self> {
        Ok(Self {
            subcommand: subcommand.to_string(),
            params: serde_json::to_value(params)?,
            inputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    /// Writes the manifest next to the first output and returns its path.
    pub fn finish(self, outputs: &[&Path]) -> Result<PathBuf> {
        let primary = outputs.first().expect("at least one output");
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            params: self.params,
            inputs: self.inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        let path = manifest_path(primary);
        write_json(&path, &manifest)?;
        Ok(path)
    }
}
