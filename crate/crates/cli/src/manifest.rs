use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

/// Record of one run, written as `manifest.json` next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub version: String,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        fs::write(dir.join(MANIFEST_NAME), bytes)?;
        Ok(())
    }
}
