#![allow(dead_code)]

use craftplan_core::craftworld::{Game, MineRule, Recipe, RecipeDb, SkillCatalog, SkillProfile, TaskSpec, WorldConfig};

pub const RECIPES: &str = include_str!("../../../../data/recipes.json");
pub const MINE_RULES: &str = include_str!("../../../../data/mine_rules.json");
pub const SKILLS: &str = include_str!("../../../../data/skills.json");
pub const TASKS: &str = include_str!("../../../../data/tasks.json");

pub fn game_with(world: WorldConfig) -> Game {
    let recipes: Vec<Recipe> = serde_json::from_str(RECIPES).unwrap();
    let mines: Vec<MineRule> = serde_json::from_str(MINE_RULES).unwrap();
    let skills: Vec<SkillProfile> = serde_json::from_str(SKILLS).unwrap();
    Game::new(RecipeDb::new(recipes, mines).unwrap(), SkillCatalog::new(skills), world)
}

pub fn game() -> Game {
    game_with(WorldConfig::default())
}

pub fn tasks() -> Vec<TaskSpec> {
    serde_json::from_str(TASKS).unwrap()
}

pub fn task(id: &str) -> TaskSpec {
    tasks().into_iter().find(|t| t.id == id).unwrap()
}
