use alloc::string::String;

use super::parse_goal_call;
use crate::craftworld::{RecipeDb, SkillCatalog};
use crate::similarity;

pub const SIMILARITY_THRESHOLD: f64 = 0.20;

#[derive(Debug, Clone, PartialEq)]
pub struct MappedGoal {
    pub skill_id: String,
    /// `None` when the phrase parsed as a goal statement.
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("no skill matches '{raw}' (best similarity {best:.3})")]
pub struct UnknownGoal {
    pub raw: String,
    pub best: f64,
}

/// Maps a free-form goal phrase onto the skill catalog.
///
/// Phrases that parse as a goal statement are matched structurally. Anything
/// else goes to the most similar skill description, provided the trigram
/// cosine clears [`SIMILARITY_THRESHOLD`].
pub fn map_free_goal(text: &str, skills: &SkillCatalog, recipes: &RecipeDb) -> Result<MappedGoal, UnknownGoal> {
    if let Ok(call) = parse_goal_call(text) {
        if let Some(skill) = skills.match_goal(&call, recipes) {
            return Ok(MappedGoal {
                skill_id: skill.id.clone(),
                similarity: None,
            });
        }
    }
    let best = similarity::best_match(text, skills.skills.iter().map(|s| s.description.as_str()));
    match best {
        Some((i, score)) if score >= SIMILARITY_THRESHOLD => Ok(MappedGoal {
            skill_id: skills.skills[i].id.clone(),
            similarity: Some(score),
        }),
        other => Err(UnknownGoal {
            raw: String::from(text),
            best: other.map(|(_, s)| s).unwrap_or(0.0),
        }),
    }
}
