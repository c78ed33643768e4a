//! Metric profiles: a TOML file with an optional `[profile]` description
//! and a `[metrics]` table deserialized into [`MetricConfig`].

use std::path::{Path, PathBuf};

use pcqa_core::MetricConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileInfo {
    pub name: String,
    pub description: String,
    /// Where the weight values were taken from.
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub profile: ProfileInfo,
    pub metrics: MetricConfig,
}

#[derive(Debug, Clone, Default)]
pub struct LoadedProfile {
    pub profile: Profile,
    pub path: Option<PathBuf>,
    /// Raw file contents, hashed into the config fingerprint.
    pub raw: Vec<u8>,
}

impl LoadedProfile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let raw = std::fs::read(path)
            .map_err(|e| CliError::Usage(format!("cannot read profile {}: {e}", path.display())))?;
        let text = String::from_utf8_lossy(&raw);
        let profile: Profile = toml::from_str(&text).map_err(|source| CliError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        profile.metrics.validate()?;
        Ok(Self {
            profile,
            path: Some(path.to_path_buf()),
            raw,
        })
    }

    pub fn config(&self) -> &MetricConfig {
        &self.profile.metrics
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_metrics_table() {
        let p: Profile = toml::from_str(
            "[profile]\nname = \"t\"\n[metrics]\npeak_value = 1023.0\npcqm_weights = [1,1,1,1,1,1,1,1]\n",
        )
        .unwrap();
        assert_eq!(p.metrics.peak_value, Some(1023.0));
        assert_eq!(p.metrics.pcqm_weights.as_ref().unwrap().len(), 8);
        assert_eq!(p.metrics.p2d_neighbors, 31);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(toml::from_str::<Profile>("[metrics]\nbogus = 1\n").is_err());
    }
}
