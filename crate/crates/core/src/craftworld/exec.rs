use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::items::tool_satisfies;
use super::state::uniform;
use super::{CostModel, Game, WorldState};
use crate::explainer::FailureKind;
use crate::plan_dsl::{GoalCall, GoalVerb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Success,
    /// The skill rolled a failure; the whole budget was spent.
    SkillFailure,
    /// The episode cap was hit mid-goal. Completed units are kept.
    BudgetExceeded,
    /// Executed despite a failing precondition.
    PreconditionFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub status: ExecStatus,
    pub steps_used: u64,
    pub failure: Option<FailureKind>,
    pub items_delta: BTreeMap<String, i64>,
}

impl ExecOutcome {
    pub fn success(&self) -> bool {
        self.status == ExecStatus::Success
    }
}

fn infeasible(reason: String) -> FailureKind {
    FailureKind::InfeasibleGoal { reason }
}

/// First failing precondition, checked in the order tool, inputs, station,
/// feasibility.
pub fn check_preconditions(state: &WorldState, goal: &GoalCall, game: &Game) -> Result<(), FailureKind> {
    let recipes = &game.recipes;
    match goal.verb {
        GoalVerb::Mine | GoalVerb::Kill => {
            for (item, _) in goal.outputs.iter() {
                let Some(rule) = recipes.mine_rule(item) else {
                    return Err(infeasible(format!("there is no way to {} {item}", goal.verb)));
                };
                if let Some(req) = rule.required_tool_item() {
                    let ok = goal
                        .tool
                        .as_deref()
                        .map(|d| tool_satisfies(d, &req) && state.inventory.has(d))
                        .unwrap_or(false);
                    if !ok {
                        let required = match goal.tool.as_deref() {
                            Some(d) if tool_satisfies(d, &req) => String::from(d),
                            _ => req,
                        };
                        return Err(FailureKind::MissingTool {
                            verb: goal.verb,
                            item: String::from(item),
                            required,
                        });
                    }
                } else if let Some(t) = goal.tool.as_deref() {
                    if !state.inventory.has(t) {
                        return Err(FailureKind::MissingTool {
                            verb: goal.verb,
                            item: String::from(item),
                            required: String::from(t),
                        });
                    }
                }
            }
            for (item, _) in goal.outputs.iter() {
                let rule = recipes.mine_rule(item).expect("checked above");
                if !state.reachable(item) {
                    return Err(infeasible(match &rule.mob {
                        Some(mob) if rule.host_biomes.contains(&state.biome) => format!("the {mob} has disappeared"),
                        Some(mob) => format!("there is no {mob} in {} biome", state.biome),
                        None => format!("there is no {item} in {} biome", state.biome),
                    }));
                }
            }
            feasible_skill(state, goal, game)
        }
        GoalVerb::Craft | GoalVerb::Smelt => {
            let item = goal.primary().0;
            let Some(recipe) = recipes.recipe_for_call(goal) else {
                return Err(infeasible(format!("there is no recipe for {item}")));
            };
            let batches = recipe.batches_for(item, goal.primary().1);
            for (input, per) in recipe.inputs.iter() {
                let need = per * batches;
                let have = state.inventory.get(input);
                if have < need {
                    return Err(FailureKind::InsufficientInput {
                        item: String::from(input),
                        need,
                        have,
                    });
                }
            }
            match (&recipe.station, &goal.station) {
                (Some(need), declared) if declared.as_ref() != Some(need) || !state.inventory.has(need) => {
                    return Err(FailureKind::MissingStation { station: need.clone() });
                }
                (None, Some(declared)) if !state.inventory.has(declared) => {
                    return Err(FailureKind::MissingStation {
                        station: declared.clone(),
                    });
                }
                _ => {}
            }
            feasible_skill(state, goal, game)
        }
        GoalVerb::Equip => {
            let item = goal.primary().0;
            if !state.inventory.has(item) {
                return Err(FailureKind::InsufficientInput {
                    item: String::from(item),
                    need: 1,
                    have: 0,
                });
            }
            feasible_skill(state, goal, game)
        }
    }
}

fn feasible_skill(_state: &WorldState, goal: &GoalCall, game: &Game) -> Result<(), FailureKind> {
    let Some(skill) = game.skills.match_goal(goal, &game.recipes) else {
        return Err(infeasible(format!("no skill can {} {}", goal.verb, goal.primary().0)));
    };
    let p = game.world.success_override.unwrap_or(skill.success_prob);
    if p <= 0.0 {
        return Err(infeasible(format!("the skill \"{}\" never succeeds", skill.description)));
    }
    Ok(())
}

fn success_cost(state: &mut WorldState, model: CostModel, max_steps: u64) -> u64 {
    let fraction = match model {
        CostModel::Uniform { lo, hi } => uniform(state.rng(), lo, hi),
        CostModel::Fixed { fraction } => fraction,
    };
    (libm::ceil(fraction * max_steps as f64) as u64).max(1)
}

struct Ledger {
    delta: BTreeMap<String, i64>,
    steps: u64,
}

impl Ledger {
    fn change(&mut self, item: &str, by: i64) {
        let e = self.delta.entry(String::from(item)).or_insert(0);
        *e += by;
        if *e == 0 {
            self.delta.remove(item);
        }
    }

    fn finish(self, status: ExecStatus, failure: Option<FailureKind>) -> ExecOutcome {
        ExecOutcome {
            status,
            steps_used: self.steps,
            failure,
            items_delta: self.delta,
        }
    }
}

/// Spends `cost` steps unless that would pass the cap, in which case the clock
/// stops at the cap and `false` is returned.
fn spend(state: &mut WorldState, ledger: &mut Ledger, cost: u64, game: &Game) -> bool {
    let room = state.step_cap.saturating_sub(state.steps_elapsed);
    if cost > room {
        state.advance(room, &game.recipes);
        ledger.steps += room;
        return false;
    }
    state.advance(cost, &game.recipes);
    ledger.steps += cost;
    true
}

/// Runs one goal through the simulated controller.
///
/// Gathering goals make one attempt per unit, each preceded by travel to the
/// node. Crafts and equips make a single attempt. A failed attempt spends the
/// skill's whole budget and undoes the units this call had gathered.
pub fn execute_goal(state: &mut WorldState, goal: &GoalCall, game: &Game) -> ExecOutcome {
    let mut ledger = Ledger {
        delta: BTreeMap::new(),
        steps: 0,
    };
    if let Err(f) = check_preconditions(state, goal, game) {
        spend(state, &mut ledger, 1, game);
        return ledger.finish(ExecStatus::PreconditionFailed, Some(f));
    }
    let skill = game.skills.match_goal(goal, &game.recipes).expect("preconditions found a skill").clone();
    let p = game.world.success_override.unwrap_or(skill.success_prob);
    let model = game.world.cost;

    match goal.verb {
        GoalVerb::Mine | GoalVerb::Kill => {
            let mut gathered: Vec<String> = Vec::new();
            let snapshot = state.inventory.clone();
            for (item, count) in goal.outputs.iter() {
                for _ in 0..count {
                    let travel = libm::ceil(state.distance(item) / game.world.travel_speed) as u64;
                    let ok = state.rng().random::<f64>() < p;
                    let cost = travel + if ok { success_cost(state, model, skill.max_steps) } else { skill.max_steps };
                    if !spend(state, &mut ledger, cost, game) {
                        return ledger.finish(ExecStatus::BudgetExceeded, None);
                    }
                    if !ok {
                        for g in &gathered {
                            ledger.change(g, -1);
                        }
                        state.inventory = snapshot;
                        return ledger.finish(ExecStatus::SkillFailure, None);
                    }
                    state.inventory.add(item, 1);
                    ledger.change(item, 1);
                    gathered.push(String::from(item));
                    if let Some(rule) = game.recipes.mine_rule(item) {
                        state.spawn(rule);
                    }
                }
            }
            ledger.finish(ExecStatus::Success, None)
        }
        GoalVerb::Craft | GoalVerb::Smelt => {
            let recipe = game.recipes.recipe_for_call(goal).expect("preconditions found a recipe");
            let batches = recipe.batches_for(goal.primary().0, goal.primary().1);
            let ok = state.rng().random::<f64>() < p;
            let cost = if ok { success_cost(state, model, skill.max_steps) } else { skill.max_steps };
            if !spend(state, &mut ledger, cost, game) {
                return ledger.finish(ExecStatus::BudgetExceeded, None);
            }
            if !ok {
                return ledger.finish(ExecStatus::SkillFailure, None);
            }
            for (item, per) in recipe.inputs.iter() {
                state.inventory.remove(item, per * batches).expect("inputs checked");
                ledger.change(item, -i64::from(per * batches));
            }
            for (item, per) in recipe.outputs.iter() {
                state.inventory.add(item, per * batches);
                ledger.change(item, i64::from(per * batches));
            }
            ledger.finish(ExecStatus::Success, None)
        }
        GoalVerb::Equip => {
            let ok = state.rng().random::<f64>() < p;
            let cost = if ok { success_cost(state, model, skill.max_steps) } else { skill.max_steps };
            if !spend(state, &mut ledger, cost, game) {
                return ledger.finish(ExecStatus::BudgetExceeded, None);
            }
            if ok {
                state.equipped = Some(String::from(goal.primary().0));
                ledger.finish(ExecStatus::Success, None)
            } else {
                ledger.finish(ExecStatus::SkillFailure, None)
            }
        }
    }
}
