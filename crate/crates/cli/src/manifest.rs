use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eanet::network::NetworkConfig;

use crate::{CliError, Command, OutDir, RunSpec};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Everything needed to repeat a run, plus the SHA-256 of each file it wrote
/// (paths relative to the output directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: u64,
    pub artifacts: BTreeMap<String, String>,
    pub command: Command,
    pub config: NetworkConfig,
}

impl RunManifest {
    pub fn new(spec: &RunSpec, dir: &OutDir) -> Result<Self, CliError> {
        let mut artifacts = BTreeMap::new();
        for rel in dir.written().filter(|r| *r != MANIFEST_FILE) {
            let path = dir.path(rel);
            let bytes = std::fs::read(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            artifacts.insert(rel.to_string(), hex::encode(Sha256::digest(&bytes)));
        }
        Ok(RunManifest {
            subcommand: spec.command.name().to_string(),
            seed: spec.seed,
            artifacts,
            command: spec.command.clone(),
            config: spec.config.clone(),
        })
    }

    pub fn spec(&self) -> RunSpec {
        RunSpec {
            command: self.command.clone(),
            config: self.config.clone(),
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Io(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let m: RunManifest =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if m.subcommand != m.command.name() {
            return Err(CliError::Usage(format!(
                "{}: subcommand {} does not match its parameters",
                path.display(),
                m.subcommand
            )));
        }
        m.config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(m)
    }

    /// Fails on the first artifact whose hash differs or that is missing on either side.
    pub fn verify(&self, rerun: &RunManifest) -> Result<(), CliError> {
        for (path, hash) in &self.artifacts {
            match rerun.artifacts.get(path) {
                None => return Err(CliError::Mismatch(format!("{path} was not produced"))),
                Some(h) if h != hash => return Err(CliError::Mismatch(format!("{path}: {h} instead of {hash}"))),
                Some(_) => {}
            }
        }
        if let Some(extra) = rerun.artifacts.keys().find(|p| !self.artifacts.contains_key(*p)) {
            return Err(CliError::Mismatch(format!("{extra} is not in the manifest")));
        }
        Ok(())
    }
}
