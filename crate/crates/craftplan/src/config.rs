use std::path::{Path, PathBuf};

use craftplan_core::agent::{AgentConfig, LoopMode, UNLIMITED_ROUNDS};
use craftplan_core::craftworld::WorldConfig;
use craftplan_core::planner::{FaultConfig, DEFAULT_TOKEN_CAP};
use craftplan_core::selector::{SelectMode, SelectorKind};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Oracle,
    Faulty,
    Llm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Replay these replies instead of calling the endpoint.
    pub transcript: Option<PathBuf>,
    pub token_cap: usize,
    pub temperature: Option<f64>,
    /// Ask the model for explanations instead of using the rule-based explainer.
    pub model_explains: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            transcript: None,
            token_cap: DEFAULT_TOKEN_CAP,
            temperature: None,
            model_explains: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory with the four data files; the compiled-in copies when absent.
    pub data_dir: Option<PathBuf>,
    /// Task list replacing `tasks.json`.
    pub suite: Option<PathBuf>,
    /// Task ids to run; empty runs the whole suite.
    pub tasks: Vec<String>,
    pub episodes: usize,
    pub seed_base: u64,
    pub mode: LoopMode,
    pub max_rounds: u32,
    pub max_retries: u32,
    pub planner: PlannerKind,
    pub selector: SelectorKind,
    pub select_mode: SelectMode,
    /// Horizon model checkpoint for the learned selector.
    pub model: Option<PathBuf>,
    /// Train a horizon model before running when none is given.
    pub train_selector: bool,
    pub train_episodes: usize,
    pub faults: FaultConfig,
    pub llm: LlmConfig,
    /// Worker threads; 0 uses one per core.
    pub workers: usize,
    pub output_dir: PathBuf,
    pub world: WorldConfig,
    pub record_trajectories: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            suite: None,
            tasks: Vec::new(),
            episodes: 30,
            seed_base: 0,
            mode: LoopMode::Deps,
            max_rounds: UNLIMITED_ROUNDS,
            max_retries: 2,
            planner: PlannerKind::Oracle,
            selector: SelectorKind::Fixed,
            select_mode: SelectMode::Sample,
            model: None,
            train_selector: false,
            train_episodes: 500,
            faults: FaultConfig::default(),
            llm: LlmConfig::default(),
            workers: 0,
            output_dir: PathBuf::from("out"),
            world: WorldConfig::default(),
            record_trajectories: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("bad TOML in {path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },
    #[error("bad JSON in {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    /// TOML unless the file ends in `.json`.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|source| ConfigError::Json {
                path: path.to_path_buf(),
                source,
            })?
        } else {
            toml::from_str(&text).map_err(|source| ConfigError::Toml {
                path: path.to_path_buf(),
                source,
            })?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.episodes == 0 {
            return Err(ConfigError::Invalid("episodes must be at least 1".into()));
        }
        self.faults.validate().map_err(ConfigError::Invalid)?;
        self.world.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.planner == PlannerKind::Faulty && self.mode == LoopMode::FeedbackOnly && self.faults.p_repair_without_explanation == 0.0 {
            log_note("feedback-only runs with p_repair_without_explanation = 0 never repair");
        }
        Ok(())
    }

    pub fn agent(&self) -> AgentConfig {
        AgentConfig {
            mode: self.mode,
            max_rounds: self.max_rounds,
            max_retries: self.max_retries,
            record_trajectories: self.record_trajectories,
        }
    }
}

fn log_note(msg: &str) {
    eprintln!("note: {msg}");
}
