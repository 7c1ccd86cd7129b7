//! Why a step cannot run: typed diagnoses and their fixed sentence forms.

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::craftworld::{check_preconditions, Game, Inventory, WorldState};
use crate::plan_dsl::{GoalCall, GoalVerb};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FailureKind {
    MissingTool { verb: GoalVerb, item: String, required: String },
    MissingStation { station: String },
    InsufficientInput { item: String, need: u32, have: u32 },
    InfeasibleGoal { reason: String },
    UnknownGoal { raw: String },
}

impl FailureKind {
    pub fn render(&self) -> String {
        match self {
            FailureKind::MissingTool { verb, item, required } => {
                format!("Because {verb} {item} need to use the tool {required}.")
            }
            FailureKind::MissingStation { station } => {
                format!("because the action needs to use the tool {station}, but I do not have it.")
            }
            FailureKind::InsufficientInput { item, need, have } => {
                format!("because the action needs {need} {item}, but I only have {have} {item}.")
            }
            FailureKind::InfeasibleGoal { reason } => format!("because {reason}."),
            FailureKind::UnknownGoal { raw } => format!("because I do not know how to do \"{raw}\"."),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FailureKind::MissingTool { .. } => "missing_tool",
            FailureKind::MissingStation { .. } => "missing_station",
            FailureKind::InsufficientInput { .. } => "insufficient_input",
            FailureKind::InfeasibleGoal { .. } => "infeasible_goal",
            FailureKind::UnknownGoal { .. } => "unknown_goal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub kind: FailureKind,
    /// 1-based plan step.
    pub step_index: usize,
    pub rendered: String,
}

impl Explanation {
    pub fn new(kind: FailureKind, step_index: usize) -> Self {
        let rendered = kind.render();
        Self { kind, step_index, rendered }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("step {step_index} passes its preconditions; nothing to explain")]
pub struct NotAFailure {
    pub step_index: usize,
}

/// Names the first failing precondition of `goal` against `state`.
pub fn explain_rule_based(step_index: usize, goal: &GoalCall, state: &WorldState, game: &Game) -> Result<Explanation, NotAFailure> {
    match check_preconditions(state, goal, game) {
        Ok(()) => Err(NotAFailure { step_index }),
        Err(kind) => Ok(Explanation::new(kind, step_index)),
    }
}

fn word_after<'a>(text: &'a str, marker: &str) -> Option<&'a str> {
    let start = text.find(marker)? + marker.len();
    let rest = &text[start..];
    let end = rest
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    (end > 0).then(|| &rest[..end])
}

fn number_then_item(text: &str) -> Option<(u32, &str)> {
    let text = text.trim_start();
    let digits = text.find(|c: char| !c.is_ascii_digit()).unwrap_or(text.len());
    let n: u32 = text[..digits].parse().ok()?;
    let rest = text[digits..].trim_start();
    let end = rest
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(rest.len());
    (end > 0).then(|| (n, &rest[..end]))
}

/// Reads a free-text explanation back into a diagnosis by matching the known
/// sentence forms. Anything unrecognised becomes `InfeasibleGoal` carrying the
/// cleaned text.
pub fn parse_explanation(text: &str, inventory: Option<&Inventory>) -> FailureKind {
    let mut t = text.trim();
    if let Some(rest) = t.strip_prefix("Explainer:") {
        t = rest.trim();
    }
    let lower = t.to_lowercase();

    if let Some(pos) = lower.find(", but i only have ") {
        if let Some(needs_at) = lower[..pos].rfind("needs ") {
            let need = number_then_item(&lower[needs_at + 6..pos]);
            let have = number_then_item(&lower[pos + ", but i only have ".len()..]);
            if let (Some((need, item)), Some((have, _))) = (need, have) {
                return FailureKind::InsufficientInput {
                    item: item.to_string(),
                    need,
                    have,
                };
            }
        }
    }
    if lower.contains("but i do not have it") {
        if let Some(station) = word_after(&lower, "use the tool ") {
            return FailureKind::MissingStation {
                station: station.to_string(),
            };
        }
    }
    if let Some(at) = lower.find("i do not have ") {
        if let Some((need, item)) = number_then_item(&lower[at + "i do not have ".len()..]) {
            let have = inventory.map(|inv| inv.get(item)).unwrap_or(0);
            if have < need {
                return FailureKind::InsufficientInput {
                    item: item.to_string(),
                    need,
                    have,
                };
            }
        }
    }
    if let (Some(verb_word), Some(required)) = (word_after(&lower, "because "), word_after(&lower, "need to use the tool ")) {
        if let Some(verb) = GoalVerb::from_keyword(verb_word) {
            let after_verb = lower.find(verb_word).map(|i| i + verb_word.len() + 1).unwrap_or(0);
            if let Some(item) = word_after(&lower[after_verb.min(lower.len())..], "") {
                return FailureKind::MissingTool {
                    verb,
                    item: item.to_string(),
                    required: required.to_string(),
                };
            }
        }
    }

    let mut reason = t;
    for prefix in ["because ", "Because "] {
        if let Some(rest) = reason.strip_prefix(prefix) {
            reason = rest;
        }
    }
    FailureKind::InfeasibleGoal {
        reason: reason.trim_end_matches('.').trim().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates() {
        let k = FailureKind::MissingTool {
            verb: GoalVerb::Mine,
            item: "cobblestone".into(),
            required: "wooden_pickaxe".into(),
        };
        assert_eq!(k.render(), "Because mine cobblestone need to use the tool wooden_pickaxe.");
        let k = FailureKind::InsufficientInput {
            item: "cobblestone".into(),
            need: 3,
            have: 2,
        };
        assert_eq!(k.render(), "because the action needs 3 cobblestone, but I only have 2 cobblestone.");
    }

    #[test]
    fn parses_every_template_back() {
        let kinds = [
            FailureKind::MissingTool {
                verb: GoalVerb::Mine,
                item: "diamond".into(),
                required: "iron_pickaxe".into(),
            },
            FailureKind::MissingStation {
                station: "furnace".into(),
            },
            FailureKind::InsufficientInput {
                item: "iron_ingot".into(),
                need: 3,
                have: 1,
            },
        ];
        for k in kinds {
            assert_eq!(parse_explanation(&k.render(), None), k);
        }
    }

    #[test]
    fn parses_transcript_variants() {
        let k = parse_explanation(
            "Explainer: because craft({'iron_pickaxe':1}, {'iron_ingot':3, 'stick':2}, 'crafting_table') needs 2 stick, but I only have 1 stick.",
            None,
        );
        assert_eq!(
            k,
            FailureKind::InsufficientInput {
                item: "stick".into(),
                need: 2,
                have: 1
            }
        );
        let k = parse_explanation("because I do not have 8 cobblestone.", None);
        assert!(matches!(k, FailureKind::InsufficientInput { need: 8, .. }));
    }

    #[test]
    fn gibberish_falls_back() {
        let k = parse_explanation("purple monkey dishwasher", None);
        assert_eq!(
            k,
            FailureKind::InfeasibleGoal {
                reason: "purple monkey dishwasher".into()
            }
        );
    }
}
