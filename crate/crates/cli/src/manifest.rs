//! Run manifests: every subcommand writes one next to its outputs, recording
//! the command, its parameters, the device-file digest, and the tool version.
//! Re-running a manifest (`cqad replay`) reproduces the outputs byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    /// `sha256:<hex>` of the device file, or `none` for config-free runs.
    pub config_digest: String,
    pub tool_version: String,
}

pub fn digest_file(path: &Path) -> std::io::Result<String> {
    let bytes = fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("sha256:{:x}", hasher.finalize()))
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameters: BTreeMap<String, String>,
        config_digest: Option<String>,
    ) -> Self {
        Self {
            command: command.to_string(),
            parameters,
            config_digest: config_digest.unwrap_or_else(|| "none".to_string()),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<std::path::PathBuf> {
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read manifest '{}': {e}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| format!("cannot parse manifest '{}': {e}", path.display()))
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.parameters.get(key).map(String::as_str)
    }
}
