use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{oracle_plan, oracle_steps, Feedback, Planner, PlannerError};
use crate::agent::LoopMode;
use crate::counts::ItemCounts;
use crate::craftworld::items::{canonical_tool, is_tool, tool_family, tool_tier};
use crate::craftworld::{check_preconditions, task_done, Game, TaskSpec, WorldState};
use crate::explainer::FailureKind;
use crate::plan_dsl::{GoalCall, GoalVerb, Plan, FURNACE};
use crate::seeds;

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultConfig {
    #[serde(default)]
    pub p_omit_tool_step: f64,
    #[serde(default)]
    pub p_under_quantity: f64,
    #[serde(default)]
    pub p_omit_station: f64,
    #[serde(default)]
    pub p_wrong_tool: f64,
    /// Chance that a revision without an explanation still finds the defect.
    #[serde(default = "half")]
    pub p_repair_without_explanation: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self::uniform(0.0, 0)
    }
}

impl FaultConfig {
    /// The same probability for every defect class.
    pub fn uniform(p: f64, seed: u64) -> Self {
        Self {
            p_omit_tool_step: p,
            p_under_quantity: p,
            p_omit_station: p,
            p_wrong_tool: p,
            p_repair_without_explanation: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let ps = [
            self.p_omit_tool_step,
            self.p_under_quantity,
            self.p_omit_station,
            self.p_wrong_tool,
            self.p_repair_without_explanation,
        ];
        if ps.iter().all(|p| (0.0..=1.0).contains(p)) {
            Ok(())
        } else {
            Err(String::from("fault probabilities must lie in [0, 1]"))
        }
    }
}

fn rescale(call: &GoalCall, game: &Game, from_batches: u32, to_batches: u32) -> GoalCall {
    let recipe = game.recipes.recipe_for_call(call);
    match recipe {
        Some(r) => {
            let mut c = GoalCall::craft(r.outputs.scaled(to_batches), r.inputs.scaled(to_batches), call.station.as_deref());
            c.verb = call.verb;
            c
        }
        None => {
            let mut c = call.clone();
            let scale = |counts: &ItemCounts| counts.iter().map(|(k, v)| (k, (v / from_batches.max(1) * to_batches).max(1))).collect();
            c.outputs = scale(&call.outputs);
            c.inputs = scale(&call.inputs);
            c
        }
    }
}

/// Oracle plan with defects injected. Each applicable step rolls each class
/// independently; draws happen in a fixed order so the result depends only on
/// the RNG seed.
pub fn faulty_plan(task: &TaskSpec, game: &Game, state: &WorldState, faults: &FaultConfig, rng: &mut ChaCha8Rng) -> Result<Plan, PlannerError> {
    let mut plan = oracle_plan(task, game, state)?;
    let target = task.primary_target().0;
    let mut kept = Vec::with_capacity(plan.steps.len());
    for step in plan.steps.drain(..) {
        let item = String::from(step.primary().0);
        let is_target = item == target;
        let mut step = step;
        let mut drop = false;

        if is_tool(&item) && !is_target && rng.random::<f64>() < faults.p_omit_tool_step {
            drop = true;
        }
        if !is_target {
            match step.verb {
                GoalVerb::Mine | GoalVerb::Kill if step.primary().1 >= 2 => {
                    let n = step.primary().1;
                    if rng.random::<f64>() < faults.p_under_quantity {
                        let cut = rng.random_range(1..n);
                        step.outputs.set(item.clone(), n - cut);
                    }
                }
                GoalVerb::Craft | GoalVerb::Smelt => {
                    let batches = game
                        .recipes
                        .recipe_for_call(&step)
                        .map(|r| r.batches_for(&item, step.primary().1))
                        .unwrap_or(1);
                    if batches >= 2 && rng.random::<f64>() < faults.p_under_quantity {
                        let cut = rng.random_range(1..batches);
                        step = rescale(&step, game, batches, batches - cut);
                    }
                }
                _ => {}
            }
        }
        if game.recipes.is_station(&item) && !is_target && rng.random::<f64>() < faults.p_omit_station {
            drop = true;
        }
        if step.station.is_some() && rng.random::<f64>() < faults.p_omit_station {
            step.station = None;
            if step.verb == GoalVerb::Smelt {
                step.verb = GoalVerb::Craft;
            }
        }
        if step.verb.gathers() {
            if let Some(tool) = step.tool.clone() {
                if rng.random::<f64>() < faults.p_wrong_tool {
                    let lower = tool_tier(&tool).below();
                    step.tool = lower.prefix().and(tool_family(&tool)).map(|f| canonical_tool(f, lower));
                }
            }
        }
        if !drop {
            kept.push(step);
        }
    }
    plan.steps = kept;
    Ok(plan)
}

fn consumption(call: &GoalCall, item: &str, game: &Game) -> u64 {
    if !call.verb.crafts() {
        return 0;
    }
    match game.recipes.recipe_for_call(call) {
        Some(r) => u64::from(r.inputs.get(item) * r.batches_for(call.primary().0, call.primary().1)),
        None => u64::from(call.inputs.get(item)),
    }
}

fn production(call: &GoalCall, item: &str, game: &Game) -> u64 {
    if call.verb.crafts() {
        if let Some(r) = game.recipes.recipe_for_call(call) {
            return u64::from(r.outputs.get(item) * r.batches_for(call.primary().0, call.primary().1));
        }
    }
    u64::from(call.outputs.get(item))
}

/// Emulated imperfect planner: starts from a defective plan and fixes exactly
/// the diagnosed defect on each revision.
#[derive(Debug, Clone)]
pub struct FaultyPlanner {
    pub faults: FaultConfig,
    defects: ChaCha8Rng,
    coin: ChaCha8Rng,
}

impl FaultyPlanner {
    pub fn new(faults: FaultConfig, episode_seed: u64) -> Self {
        Self {
            faults,
            defects: ChaCha8Rng::seed_from_u64(seeds::derive(faults.seed, episode_seed, seeds::FAULTS)),
            coin: ChaCha8Rng::seed_from_u64(seeds::derive(faults.seed, episode_seed, seeds::REPAIR_COIN)),
        }
    }

    fn sub_plan(&self, item: &str, count: u32, state: &WorldState, game: &Game) -> Result<Vec<GoalCall>, PlannerError> {
        let durable_only = |i: &str| if game.recipes.is_durable(i) { state.inventory.get(i) } else { 0 };
        oracle_steps(&ItemCounts::single(item, count), game, state, &durable_only)
    }

    fn repair(&self, kind: &FailureKind, at: usize, plan: &Plan, state: &WorldState, game: &Game) -> Result<Plan, PlannerError> {
        let mut plan = plan.clone();
        let mut insert: Vec<GoalCall> = Vec::new();
        match kind {
            FailureKind::InsufficientInput { item, need, have } => {
                let rest = &plan.steps[at..];
                let used: u64 = rest.iter().map(|s| consumption(s, item, game)).sum();
                let made: u64 = rest.iter().map(|s| production(s, item, game)).sum();
                let deficit = u64::from(need - have).max(used.saturating_sub(u64::from(*have) + made));
                insert = self.sub_plan(item, u32::try_from(deficit).unwrap_or(u32::MAX), state, game)?;
            }
            FailureKind::MissingTool { required, .. } => {
                let step = &mut plan.steps[at];
                step.tool = Some(required.clone());
                if !state.inventory.has(required) {
                    insert = self.sub_plan(required, 1, state, game)?;
                }
            }
            FailureKind::MissingStation { station } => {
                let step = &mut plan.steps[at];
                if step.station.as_deref() != Some(station.as_str()) {
                    step.station = Some(station.clone());
                    if station == FURNACE {
                        step.verb = GoalVerb::Smelt;
                    }
                }
                if !state.inventory.has(station) {
                    insert = self.sub_plan(station, 1, state, game)?;
                }
            }
            FailureKind::InfeasibleGoal { .. } | FailureKind::UnknownGoal { .. } => {}
        }
        plan.steps.splice(at..at, insert);
        Ok(plan)
    }
}

impl Planner for FaultyPlanner {
    fn initial_plan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game) -> Result<Plan, PlannerError> {
        let faults = self.faults;
        faulty_plan(task, game, state, &faults, &mut self.defects)
    }

    fn replan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game, fb: &Feedback<'_>) -> Result<Plan, PlannerError> {
        let Some(failed) = fb.failed_step else {
            // Plan ran out: append what is still missing.
            let mut plan = fb.plan.clone();
            if !task_done(state, task) {
                let missing: ItemCounts = task
                    .target
                    .iter()
                    .filter(|(k, n)| state.inventory.high_water(k) < *n)
                    .map(|(k, n)| (k, n - state.inventory.get(k).min(n)))
                    .collect();
                plan.steps.extend(oracle_steps(&missing, game, state, &|i| state.inventory.get(i))?);
            }
            return Ok(plan);
        };
        let at = failed - 1;
        let diagnosis = match fb.mode {
            LoopMode::Deps => fb.explanation.map(|e| e.kind.clone()),
            LoopMode::FeedbackOnly => {
                if self.coin.random::<f64>() < self.faults.p_repair_without_explanation {
                    check_preconditions(state, &fb.plan.steps[at], game).err()
                } else {
                    None
                }
            }
            LoopMode::OneShot => None,
        };
        match diagnosis {
            Some(kind) => self.repair(&kind, at, fb.plan, state, game),
            None => Ok(fb.plan.clone()),
        }
    }
}
