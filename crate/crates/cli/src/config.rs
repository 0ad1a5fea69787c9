use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use prs_core::coalition::ObservedAggregation;
use prs_core::dataset::{AliasTable, SynthConfig};
use prs_core::inference::BootstrapConfig;
use prs_core::xga::{FeatureSpec, GbtParams, GlmConfig, LearnerConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable consulted when `--config` is absent.
pub const CONFIG_ENV: &str = "PRS_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Read `paths.actions` and `paths.players`.
    #[default]
    Files,
    /// Generate in memory from the `[synth]` section.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub source: DataSource,
    pub actions: PathBuf,
    pub players: PathBuf,
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            source: DataSource::Files,
            actions: "actions.csv".into(),
            players: "players.csv".into(),
            output: "prs-out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    #[default]
    Cloglog,
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Xg,
    #[default]
    Xga,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: LearnerKind,
    /// Feature set of the worth model; must be `xga` for coalitions and PRS.
    pub mode: ModeName,
    pub glm: GlmConfig,
    pub gbt: GbtParams,
}

impl ModelSection {
    pub fn learner(&self) -> LearnerConfig {
        match self.kind {
            LearnerKind::Cloglog => LearnerConfig::Cloglog(self.glm.clone()),
            LearnerKind::Gbt => LearnerConfig::Gbt(self.gbt.clone()),
        }
    }

    pub fn spec(&self) -> FeatureSpec {
        match self.mode {
            ModeName::Xg => FeatureSpec::xg(),
            ModeName::Xga => FeatureSpec::xga(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub min_actions: usize,
    pub strict: bool,
    /// Raw situation label -> canonical name (`open_play`, `free_kick`, `penalty`, `other`).
    pub situation_aliases: BTreeMap<String, String>,
    /// Raw role label -> canonical code (`GK`, `DEF`, `MID`, `FOR`).
    pub role_aliases: BTreeMap<String, String>,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self {
            min_actions: prs_core::dataset::DEFAULT_MIN_ACTIONS,
            strict: true,
            situation_aliases: BTreeMap::new(),
            role_aliases: BTreeMap::new(),
        }
    }
}

impl FilterSection {
    pub fn alias_table(&self) -> Result<AliasTable, CliError> {
        let base = AliasTable::default();
        let mut situations = Vec::new();
        for (k, v) in &self.situation_aliases {
            let target =
                base.situation(v).ok_or_else(|| CliError::Input(format!("situation alias `{k}`: unknown target `{v}`")))?;
            situations.push((k.as_str(), target));
        }
        let mut roles = Vec::new();
        for (k, v) in &self.role_aliases {
            let target = base.role(v).ok_or_else(|| CliError::Input(format!("role alias `{k}`: unknown target `{v}`")))?;
            roles.push((k.as_str(), target));
        }
        Ok(base.with_aliases(situations, roles).strict(self.strict))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    /// Out-of-bag replications for the metric table.
    pub oob_replications: usize,
    /// Replications for feature-importance intervals.
    pub importance_replications: usize,
    /// Seed for model-performance bootstraps.
    pub seed: u64,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { oob_replications: 200, importance_replications: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapleySection {
    /// Population size in the permutation weights; the filtered roster size when unset.
    pub n_override: Option<usize>,
    pub aggregation: ObservedAggregation,
    /// Largest coalition size in the distribution table (capped at the roster size).
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub synth: SynthConfig,
    pub model: ModelSection,
    pub filter: FilterSection,
    pub evaluate: EvaluateSection,
    pub bootstrap: BootstrapConfig,
    pub shapley: ShapleySection,
}

impl RunConfig {
    /// Parses a config file and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| CliError::Input(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.paths.actions, &mut self.paths.players, &mut self.paths.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
