//! Symbolic, seeded crafting world.
//!
//! Skills succeed with fixed probabilities and cost steps out of a per-skill
//! budget; gathering also pays travel to the resource node. Biomes decide
//! which nodes exist at a finite distance.

mod exec;
mod inventory;
pub mod items;
mod recipes;
mod skills;
mod state;
mod task;

use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use exec::{check_preconditions, execute_goal, ExecOutcome, ExecStatus};
pub use inventory::{Inventory, Shortfall};
pub use items::ToolTier;
pub use recipes::{MineRule, Recipe, RecipeDb, RecipeKind};
pub use skills::{SkillCatalog, SkillProfile};
pub use state::{reset_world, CostModel, MobState, WorldConfig, WorldState};
pub use task::{task_done, TaskSpec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WorldError {
    #[error("invalid world config: {0}")]
    InvalidConfig(String),
}

/// Static data shared by every episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Game {
    pub recipes: RecipeDb,
    pub skills: SkillCatalog,
    pub world: WorldConfig,
}

impl Game {
    pub fn new(recipes: RecipeDb, skills: SkillCatalog, world: WorldConfig) -> Self {
        Self { recipes, skills, world }
    }

    /// Fresh state for `task` under `seed`, with the task's cap and starting items.
    pub fn reset(&self, seed: u64, task: &TaskSpec) -> Result<WorldState, WorldError> {
        let mut state = reset_world(seed, &self.world, &self.recipes, task.biome.as_deref())?;
        state.step_cap = task.max_episode_steps;
        for (item, n) in task.initial_inventory.iter() {
            state.inventory.add(item, n);
        }
        Ok(state)
    }
}
