use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{RecipeDb, WorldState};
use crate::counts::ItemCounts;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub target: ItemCounts,
    pub max_episode_steps: u64,
    pub meta_group: String,
    /// Prompt phrasing, e.g. `How to mine 1 diamond`. Derived when absent.
    #[serde(default)]
    pub question: Option<String>,
    /// Abstract requirement → interchangeable concrete items.
    #[serde(default)]
    pub alternatives: BTreeMap<String, Vec<String>>,
    /// Items tracked by the milestone funnel, in reporting order.
    #[serde(default)]
    pub milestones: Vec<String>,
    #[serde(default)]
    pub initial_inventory: ItemCounts,
    /// Pins the biome instead of drawing one per seed.
    #[serde(default)]
    pub biome: Option<String>,
}

impl TaskSpec {
    pub fn new(id: &str, item: &str, count: u32, max_episode_steps: u64, meta_group: &str) -> Self {
        Self {
            id: String::from(id),
            target: ItemCounts::single(item, count),
            max_episode_steps,
            meta_group: String::from(meta_group),
            question: None,
            alternatives: BTreeMap::new(),
            milestones: Vec::new(),
            initial_inventory: ItemCounts::new(),
            biome: None,
        }
    }

    pub fn primary_target(&self) -> (&str, u32) {
        self.target.first().unwrap_or(("", 0))
    }

    pub fn question(&self, recipes: &RecipeDb) -> String {
        if let Some(q) = &self.question {
            return q.clone();
        }
        let (item, n) = self.primary_target();
        let verb = match recipes.mine_rule(item) {
            Some(r) if r.is_mob() => "kill",
            Some(_) => "mine",
            None => "craft",
        };
        format!("How to {verb} {n} {item}")
    }

    /// Plan function name derived from the question: `mine_1_diamond`.
    pub fn plan_name(&self, recipes: &RecipeDb) -> String {
        let q = self.question(recipes);
        let body = q.strip_prefix("How to ").unwrap_or(&q);
        let mut name = String::new();
        for ch in body.chars() {
            if ch.is_ascii_alphanumeric() || ch == '_' {
                name.push(ch.to_ascii_lowercase());
            } else if !name.ends_with('_') && !name.is_empty() {
                name.push('_');
            }
        }
        let name = name.trim_end_matches('_');
        if name.is_empty() || name.starts_with(|c: char| c.is_ascii_digit()) {
            format!("task_{name}")
        } else {
            String::from(name)
        }
    }
}

/// Whether every target count has been held at some point.
pub fn task_done(state: &WorldState, task: &TaskSpec) -> bool {
    task.target.iter().all(|(item, n)| state.inventory.high_water(item) >= n)
}
