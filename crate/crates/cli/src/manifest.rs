//! Run manifests: what was read, what was written, and how it went.

use std::path::Path;

use anyhow::Context;
use psyfuse_core::pipeline::EnhancementConfig;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool_version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<EnhancementConfig>,
    pub entries: Vec<Entry>,
}

#[derive(Debug, Serialize)]
pub struct Entry {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// `"ok"` or the error message.
    pub status: String,
    /// Non-fatal remarks, such as clipped samples.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &'static str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            config: None,
            entries: Vec::new(),
        }
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.status != "ok").count()
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
