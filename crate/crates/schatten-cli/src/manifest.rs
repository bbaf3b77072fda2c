//! Run manifests: the identity of a run, embedded in every JSON report.
//!
//! A manifest holds the subcommand, the resolved parameters, SHA-256
//! digests of all file inputs, the tool version, and the seed. Two runs
//! with equal manifests produce equal reports, so the manifest carries
//! no timestamps and no execution-resource settings (thread counts do
//! not change results and are deliberately excluded).

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use schatten::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Resolved parameters, keyed alphabetically (serde_json maps are
    /// ordered), so serialization is deterministic.
    pub parameters: Map<String, Value>,
    pub inputs: Vec<InputDigest>,
}

impl RunManifest {
    pub fn new(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            parameters: Map::new(),
            inputs: Vec::new(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_string(), value.into());
        self
    }

    /// Digests the file and records it as an input.
    pub fn input(mut self, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(digest),
        });
        Ok(self)
    }
}
