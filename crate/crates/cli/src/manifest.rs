use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command: its arguments, resolved
/// parameters and the digests of the files it read.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Command line after the program name.
    pub args: Vec<String>,
    pub parameters: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub timestamp: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `SOURCE_DATE_EPOCH` when set, so manifests can be reproduced too.
fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    fixed
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String], parameters: serde_json::Value) -> Self {
        RunManifest {
            tool: env!("CARGO_BIN_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            args: args.to_vec(),
            parameters,
            inputs: Vec::new(),
            timestamp: timestamp(),
        }
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialises") + "\n"
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: not a run manifest: {e}", path.display())))
    }

    /// Fails when a recorded input is missing or its content changed.
    pub fn verify_inputs(&self) -> Result<(), Failure> {
        for input in &self.inputs {
            let bytes = std::fs::read(&input.path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", input.path)))?;
            let now = sha256_hex(&bytes);
            if now != input.sha256 {
                return Err(Failure::Data(format!(
                    "{} changed since the run (sha256 {now}, recorded {})",
                    input.path, input.sha256
                )));
            }
        }
        Ok(())
    }
}
