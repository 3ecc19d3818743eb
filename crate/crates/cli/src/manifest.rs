//! Per-run manifest: resolved configuration plus content hashes of inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use protect_core::Result;

/// SHA-256 of `blob <len>\0<content>`, the way git hashes file contents.
pub fn blob_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Default)]
pub struct Manifest {
    command: String,
    config: BTreeMap<String, String>,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, config: BTreeMap<String, String>) -> Self {
        Self { command: command.to_string(), config, ..Self::default() }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn inputs<'a>(&mut self, paths: impl IntoIterator<Item = &'a PathBuf>) {
        self.inputs.extend(paths.into_iter().cloned());
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, out_dir: &Path) -> Result<()> {
        let inputs: Vec<Value> = self
            .inputs
            .iter()
            .map(|p| -> Result<Value> {
                let bytes = fs::read(p)?;
                Ok(json!({ "path": p.display().to_string(), "sha256": blob_hash(&bytes), "bytes": bytes.len() }))
            })
            .collect::<Result<_>>()?;
        let doc = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "inputs": inputs,
            "outputs": self.outputs,
        });
        fs::create_dir_all(out_dir)?;
        fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&doc)? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_blob_layout() {
        // sha256 of "blob 0\0"
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
