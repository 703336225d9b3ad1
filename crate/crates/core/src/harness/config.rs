use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentSpec;
use crate::env::EvalOn;
use crate::error::{Error, Result};
use crate::lc::AlcConfig;
use crate::meta::{Round, SplitKind};

/// One agent entry: an id used in reports and file names, plus its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEntry {
    pub id: String,
    #[serde(flatten)]
    pub spec: AgentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Meta-dataset directory; relative paths resolve against the config file.
    pub meta_dataset: PathBuf,
    /// Expected protocol; checked against the loaded meta-dataset when set.
    #[serde(default)]
    pub protocol: Option<Round>,
    #[serde(default = "default_split")]
    pub split: SplitKind,
    /// Empty means the full baseline roster.
    #[serde(default)]
    pub agents: Vec<AgentEntry>,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default)]
    pub alc: AlcConfig<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Relative paths resolve against the config file.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub eval_on: EvalOn,
    /// Actions allowed per episode before it is cut off and scored 0.
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_split() -> SplitKind {
    SplitKind::Kfold { k: 6 }
}
fn default_runs() -> usize {
    3
}
fn default_output() -> PathBuf {
    PathBuf::from("results")
}
fn default_max_steps() -> usize {
    100_000
}

impl ExperimentConfig {
    pub fn new(meta_dataset: impl Into<PathBuf>) -> Self {
        Self {
            meta_dataset: meta_dataset.into(),
            protocol: None,
            split: default_split(),
            agents: Vec::new(),
            n_runs: default_runs(),
            alc: AlcConfig::default(),
            seed: 0,
            output_dir: default_output(),
            jobs: 0,
            eval_on: EvalOn::default(),
            max_steps: default_max_steps(),
        }
    }

    /// Reads a config and resolves its relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.meta_dataset = base.join(&cfg.meta_dataset);
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    /// The configured agents, or the baseline roster when none are listed.
    pub fn roster(&self) -> Vec<AgentEntry> {
        if self.agents.is_empty() {
            AgentSpec::baseline_roster()
                .into_iter()
                .map(|(id, spec)| AgentEntry { id, spec })
                .collect()
        } else {
            self.agents.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be >= 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be >= 1".into()));
        }
        self.alc.validate().map_err(|e| Error::Config(e.to_string()))?;
        let roster = self.roster();
        let mut ids: Vec<&str> = roster.iter().map(|a| a.id.as_str()).collect();
        for id in &ids {
            let ok = !id.is_empty()
                && !id.contains("__")
                && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(Error::Config(format!(
                    "agent id '{id}' must be non-empty ASCII letters, digits, '-' or '_' without '__'"
                )));
            }
        }
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate agent id '{}'", w[0])));
        }
        for a in &roster {
            a.spec.build(self.seed)?;
        }
        Ok(())
    }
}
