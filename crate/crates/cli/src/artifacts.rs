use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_SNAPSHOT_FILE: &str = "resolved_config.toml";

/// Writes files into the output directory and remembers their SHA-256.
pub struct ArtifactWriter {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn bytes(&mut self, name: &str, data: &[u8]) -> Result<(), CliError> {
        let path = self.path(name);
        std::fs::write(&path, data).map_err(|e| CliError::stage("write")(format!("{}: {e}", path.display())))?;
        self.hashes.insert(name.to_string(), hex::encode(Sha256::digest(data)));
        log::debug!("wrote {}", path.display());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::stage("write")(e.to_string()))?;
        text.push('\n');
        self.bytes(name, text.as_bytes())
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        self.bytes(name, &to_csv(rows)?)
    }

    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.hashes
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::stage("write")(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::stage("write")(e.to_string()))
}

/// Keeps team ids usable as file-name fragments.
pub fn file_stem(team: &str) -> String {
    team.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Record of one `prs` run. Everything except `timings_ms` is reproducible from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: String,
    pub base_seed: u64,
    pub evaluate_seed: u64,
    pub data_provenance: String,
    pub teams: Vec<TeamSummary>,
    /// SHA-256 of every artifact written, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSummary {
    pub team_id: String,
    pub roster_size: usize,
    /// Population size used in the restricted weights.
    pub n: usize,
    pub actions: usize,
    pub observed_coalitions: usize,
    pub unobserved_coalitions: usize,
    pub players_without_support: Vec<String>,
}
