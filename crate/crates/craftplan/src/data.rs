//! Recipe, skill and task files. The copies under `data/` are compiled in so
//! the binary runs from any directory.

use std::fs;
use std::path::{Path, PathBuf};

use craftplan_core::craftworld::{Game, MineRule, Recipe, RecipeDb, SkillCatalog, SkillProfile, TaskSpec, WorldConfig, WorldError};
use serde::de::DeserializeOwned;

const RECIPES: &str = include_str!("../../../data/recipes.json");
const MINE_RULES: &str = include_str!("../../../data/mine_rules.json");
const SKILLS: &str = include_str!("../../../data/skills.json");
const TASKS: &str = include_str!("../../../data/tasks.json");

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("task suite is empty")]
    EmptySuite,
    #[error("unknown task '{0}'")]
    UnknownTask(String),
}

#[derive(Debug, Clone)]
pub struct DataSet {
    pub game: Game,
    pub tasks: Vec<TaskSpec>,
}

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, DataError> {
    serde_json::from_str(text).map_err(|source| DataError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn read<T: DeserializeOwned>(path: &Path) -> Result<T, DataError> {
    let text = fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text, path)
}

fn build(recipes: Vec<Recipe>, mines: Vec<MineRule>, skills: Vec<SkillProfile>, tasks: Vec<TaskSpec>, world: WorldConfig) -> Result<DataSet, DataError> {
    world.validate()?;
    if tasks.is_empty() {
        return Err(DataError::EmptySuite);
    }
    Ok(DataSet {
        game: Game::new(RecipeDb::new(recipes, mines)?, SkillCatalog::new(skills), world),
        tasks,
    })
}

impl DataSet {
    /// The compiled-in data files.
    pub fn embedded(world: WorldConfig) -> Result<Self, DataError> {
        let p = Path::new("<embedded>");
        build(parse(RECIPES, p)?, parse(MINE_RULES, p)?, parse(SKILLS, p)?, parse(TASKS, p)?, world)
    }

    /// `recipes.json`, `mine_rules.json`, `skills.json` and `tasks.json` from `dir`.
    pub fn load_dir(dir: &Path, world: WorldConfig) -> Result<Self, DataError> {
        build(
            read(&dir.join("recipes.json"))?,
            read(&dir.join("mine_rules.json"))?,
            read(&dir.join("skills.json"))?,
            read(&dir.join("tasks.json"))?,
            world,
        )
    }

    pub fn with_suite(mut self, path: &Path) -> Result<Self, DataError> {
        let tasks: Vec<TaskSpec> = read(path)?;
        if tasks.is_empty() {
            return Err(DataError::EmptySuite);
        }
        self.tasks = tasks;
        Ok(self)
    }

    /// Keeps only the named tasks, in the order given. Empty keeps all.
    pub fn select(mut self, ids: &[String]) -> Result<Self, DataError> {
        if ids.is_empty() {
            return Ok(self);
        }
        let mut picked = Vec::with_capacity(ids.len());
        for id in ids {
            picked.push(self.task(id)?.clone());
        }
        self.tasks = picked;
        Ok(self)
    }

    pub fn task(&self, id: &str) -> Result<&TaskSpec, DataError> {
        self.tasks.iter().find(|t| t.id == id).ok_or_else(|| DataError::UnknownTask(id.to_string()))
    }
}

/// Replies file for the replay endpoint and the mock server. Extra fields
/// (expected lines, pickups) are ignored.
#[derive(Debug, Clone, serde::Deserialize, serde::Serialize)]
pub struct Transcript {
    pub replies: Vec<String>,
}

impl Transcript {
    pub fn load(path: &Path) -> Result<Self, DataError> {
        read(path)
    }
}
