use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::items::{canonical_pickaxe, is_tool, ToolTier};
use super::WorldError;
use crate::counts::ItemCounts;
use crate::plan_dsl::GoalCall;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    #[default]
    Craft,
    Smelt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recipe {
    pub id: String,
    pub outputs: ItemCounts,
    pub inputs: ItemCounts,
    #[serde(default)]
    pub station: Option<String>,
    #[serde(default)]
    pub kind: RecipeKind,
}

impl Recipe {
    /// Smallest number of batches yielding at least `count` of `item`.
    pub fn batches_for(&self, item: &str, count: u32) -> u32 {
        let per = self.outputs.get(item).max(1);
        count.div_ceil(per).max(1)
    }
}

/// How an item is gathered: by mining a block or killing a mob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MineRule {
    pub item: String,
    #[serde(default)]
    pub required_tier: ToolTier,
    /// Non-pickaxe tool requirement, e.g. `shears`.
    #[serde(default)]
    pub required_tool: Option<String>,
    pub host_biomes: Vec<String>,
    pub distance_range: [f64; 2],
    /// Set for mob drops; the value is the mob the kill skill targets.
    #[serde(default)]
    pub mob: Option<String>,
    /// Catalog target to use instead of `item` when matching skills.
    #[serde(default)]
    pub skill_item: Option<String>,
    /// A despawned mob reappears this far away instead of vanishing for good.
    #[serde(default)]
    pub respawn_distance_range: Option<[f64; 2]>,
}

impl MineRule {
    pub fn required_tool_item(&self) -> Option<String> {
        self.required_tool.clone().or_else(|| canonical_pickaxe(self.required_tier))
    }

    pub fn is_mob(&self) -> bool {
        self.mob.is_some()
    }

    fn validate(&self) -> Result<(), WorldError> {
        let ok_range = |r: &[f64; 2]| r[0] >= 0.0 && r[0] <= r[1] && r[1].is_finite();
        if !ok_range(&self.distance_range) || !self.respawn_distance_range.as_ref().map(ok_range).unwrap_or(true) {
            return Err(WorldError::InvalidConfig(format!("bad distance range for '{}'", self.item)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecipeDb {
    pub recipes: Vec<Recipe>,
    pub mine_rules: Vec<MineRule>,
}

impl RecipeDb {
    pub fn new(recipes: Vec<Recipe>, mine_rules: Vec<MineRule>) -> Result<Self, WorldError> {
        let db = Self { recipes, mine_rules };
        db.validate()?;
        Ok(db)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for r in &self.recipes {
            if r.outputs.is_empty() || r.inputs.is_empty() {
                return Err(WorldError::InvalidConfig(format!("recipe '{}' needs inputs and outputs", r.id)));
            }
            if r.outputs.iter().chain(r.inputs.iter()).any(|(_, v)| v == 0) {
                return Err(WorldError::InvalidConfig(format!("recipe '{}' has a zero count", r.id)));
            }
        }
        for m in &self.mine_rules {
            m.validate()?;
        }
        Ok(())
    }

    pub fn mine_rule(&self, item: &str) -> Option<&MineRule> {
        self.mine_rules.iter().find(|m| m.item == item)
    }

    pub fn recipes_for<'s, 'i>(&'s self, item: &'i str) -> impl Iterator<Item = &'s Recipe> + use<'s, 'i> {
        self.recipes.iter().filter(move |r| r.outputs.contains(item))
    }

    pub fn recipe(&self, id: &str) -> Option<&Recipe> {
        self.recipes.iter().find(|r| r.id == id)
    }

    /// Recipe a craft call refers to: the one whose inputs and station match
    /// the call best, lowest id breaking ties.
    pub fn recipe_for_call(&self, call: &GoalCall) -> Option<&Recipe> {
        let item = call.primary().0;
        self.recipes_for(item).max_by(|a, b| {
            let score = |r: &Recipe| {
                let same_inputs = r.inputs.len() == call.inputs.len() && r.inputs.keys().all(|k| call.inputs.contains(k));
                (same_inputs, r.station == call.station)
            };
            score(a).cmp(&score(b)).then_with(|| b.id.cmp(&a.id))
        })
    }

    pub fn is_station(&self, item: &str) -> bool {
        self.recipes.iter().any(|r| r.station.as_deref() == Some(item))
    }

    /// Tools and stations: needed once, never consumed.
    pub fn is_durable(&self, item: &str) -> bool {
        is_tool(item) || self.is_station(item)
    }

    pub fn knows(&self, item: &str) -> bool {
        self.mine_rule(item).is_some()
            || self.recipes.iter().any(|r| {
                r.outputs.contains(item) || r.inputs.contains(item) || r.station.as_deref() == Some(item)
            })
            || self.mine_rules.iter().any(|m| m.required_tool_item().as_deref() == Some(item))
    }

    pub fn biomes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for b in self.mine_rules.iter().flat_map(|m| m.host_biomes.iter()) {
            if !out.contains(b) {
                out.push(b.clone());
            }
        }
        out
    }
}
