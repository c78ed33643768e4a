use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::profile::LoadedProfile;
use crate::report::to_canonical_json;

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Provenance block embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the effective metric configuration and the profile file.
    pub config_fingerprint: String,
    pub inputs: BTreeMap<String, String>,
    pub tool_version: &'static str,
    /// Seconds since the Unix epoch; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, profile: &LoadedProfile) -> CliResult<Self> {
        Ok(Self {
            command: command.to_string(),
            config_fingerprint: config_fingerprint(profile)?,
            inputs: BTreeMap::new(),
            tool_version: TOOL_VERSION,
            timestamp: timestamp(),
        })
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let digest = file_digest(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }
}

pub fn config_fingerprint(profile: &LoadedProfile) -> CliResult<String> {
    let mut h = Sha256::new();
    h.update(to_canonical_json(profile.config())?.as_bytes());
    h.update([0u8]);
    h.update(&profile.raw);
    Ok(hex::encode(h.finalize()))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}
