use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::items::tool_satisfies;
use super::RecipeDb;
use crate::plan_dsl::{GoalCall, GoalVerb};

/// One controller skill with its success statistics.
///
/// `target_item: None` is a wildcard (any craft, any equip). For crafts the
/// `tool` field holds the station the skill works at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillProfile {
    pub id: String,
    pub description: String,
    pub verb: GoalVerb,
    #[serde(default)]
    pub target_item: Option<String>,
    #[serde(default)]
    pub tool: Option<String>,
    pub success_prob: f64,
    pub max_steps: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkillCatalog {
    pub skills: Vec<SkillProfile>,
}

fn tool_rank(skill_tool: Option<&str>, call_tool: Option<&str>) -> u8 {
    match (skill_tool, call_tool) {
        (a, b) if a == b => 3,
        // A bare family name like `pickaxe` has tier None, so any pickaxe fits.
        (Some(s), Some(c)) if tool_satisfies(c, s) => 2,
        (None, Some(_)) => 1,
        _ => 0,
    }
}

impl SkillCatalog {
    pub fn new(skills: Vec<SkillProfile>) -> Self {
        Self { skills }
    }

    pub fn get(&self, id: &str) -> Option<&SkillProfile> {
        self.skills.iter().find(|s| s.id == id)
    }

    /// Most specific skill for a goal; earlier entries win ties.
    ///
    /// Specificity is an exact target over a wildcard, then tool fit:
    /// exact > same family of sufficient tier > tool-agnostic skill > mismatch.
    pub fn match_goal(&self, call: &GoalCall, recipes: &RecipeDb) -> Option<&SkillProfile> {
        let item = call.primary().0;
        let rule = recipes.mine_rule(item);
        let aliases = [
            Some(item),
            rule.and_then(|r| r.skill_item.as_deref()),
            rule.and_then(|r| r.mob.as_deref()),
        ];
        let call_tool = if call.verb.crafts() {
            call.station.as_deref()
        } else {
            call.tool.as_deref()
        };
        let mut best: Option<(&SkillProfile, (u8, u8))> = None;
        for skill in self.skills.iter().filter(|s| s.verb == call.verb) {
            let target = match skill.target_item.as_deref() {
                None => 1,
                Some(t) if aliases.contains(&Some(t)) => 2,
                Some(_) => continue,
            };
            let score = (target, tool_rank(skill.tool.as_deref(), call_tool));
            if best.map(|(_, b)| score > b).unwrap_or(true) {
                best = Some((skill, score));
            }
        }
        best.map(|(s, _)| s)
    }
}
