use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{Feedback, Planner, PlannerError};
use crate::counts::ItemCounts;
use crate::craftworld::{Game, MineRule, Recipe, TaskSpec, WorldState};
use crate::plan_dsl::{GoalCall, Plan};

#[derive(Clone, Copy)]
enum Source<'a> {
    Gather(&'a MineRule),
    Craft(&'a Recipe),
    /// Not producible here, but possibly already held.
    Stock,
}

impl<'a> Source<'a> {
    fn deps(&self) -> Vec<String> {
        match self {
            Source::Gather(rule) => rule.required_tool_item().into_iter().collect(),
            Source::Craft(r) => r.inputs.keys().chain(r.station.as_deref()).map(String::from).collect(),
            Source::Stock => Vec::new(),
        }
    }
}

struct Chooser<'a> {
    game: &'a Game,
    state: &'a WorldState,
    memo: BTreeMap<String, Option<(Source<'a>, f64)>>,
    visiting: BTreeSet<String>,
}

impl<'a> Chooser<'a> {
    fn success_prob(&self, call: &GoalCall) -> Option<(f64, u64)> {
        let skill = self.game.skills.match_goal(call, &self.game.recipes)?;
        let p = self.game.world.success_override.unwrap_or(skill.success_prob);
        (p > 0.0).then_some((p, skill.max_steps))
    }

    /// Cheapest way to get one unit of `item`, by estimated steps.
    fn choose(&mut self, item: &str) -> Option<(Source<'a>, f64)> {
        if let Some(hit) = self.memo.get(item) {
            return *hit;
        }
        if !self.visiting.insert(String::from(item)) {
            return None;
        }
        let game = self.game;
        let mut best: Option<(Source<'a>, f64, String)> = None;
        let consider = |src: Source<'a>, est: f64, id: String, best: &mut Option<(Source<'a>, f64, String)>| {
            let better = match best {
                None => true,
                Some((_, e, bid)) => match est.partial_cmp(e).unwrap_or(Ordering::Equal) {
                    Ordering::Less => true,
                    Ordering::Equal => id < *bid,
                    Ordering::Greater => false,
                },
            };
            if better {
                *best = Some((src, est, id));
            }
        };

        if let Some(rule) = game.recipes.mine_rule(item) {
            if self.state.reachable(item) {
                let tool = rule.required_tool_item();
                let call = if rule.is_mob() {
                    GoalCall::kill(item, 1, tool.as_deref())
                } else {
                    GoalCall::mine(item, 1, tool.as_deref())
                };
                let tool_ok = tool.as_deref().map(|t| self.choose(t).is_some()).unwrap_or(true);
                if let (true, Some((p, max))) = (tool_ok, self.success_prob(&call)) {
                    let travel = libm::ceil(self.state.distance(item) / game.world.travel_speed);
                    let mut id = String::from("mine:");
                    id.push_str(item);
                    consider(Source::Gather(rule), (travel + max as f64) / p, id, &mut best);
                }
            }
        }

        let mut recipes: Vec<&'a Recipe> = game.recipes.recipes_for(item).collect();
        recipes.sort_by(|a, b| a.id.cmp(&b.id));
        'recipes: for r in recipes {
            let call = GoalCall::craft(r.outputs.clone(), r.inputs.clone(), r.station.as_deref());
            let Some((p, max)) = self.success_prob(&call) else { continue };
            let mut est = max as f64 / p;
            let per = f64::from(r.outputs.get(item).max(1));
            for (input, qty) in r.inputs.iter() {
                match self.choose(input) {
                    Some((_, e)) => est += f64::from(qty) * e / per,
                    None => continue 'recipes,
                }
            }
            if let Some(st) = r.station.as_deref() {
                if self.choose(st).is_none() {
                    continue;
                }
            }
            consider(Source::Craft(r), est, r.id.clone(), &mut best);
        }

        self.visiting.remove(item);
        let result = best.map(|(s, e, _)| (s, e));
        self.memo.insert(String::from(item), result);
        result
    }
}

/// Steps that produce `targets` from what `have` reports as held.
///
/// Quantities respect recipe batch sizes; tools and stations are produced once
/// and only if not already held.
pub fn oracle_steps(
    targets: &ItemCounts,
    game: &Game,
    state: &WorldState,
    have: &dyn Fn(&str) -> u32,
) -> Result<Vec<GoalCall>, PlannerError> {
    let mut chooser = Chooser {
        game,
        state,
        memo: BTreeMap::new(),
        visiting: BTreeSet::new(),
    };

    // Sources for everything reachable from the targets, and a producer-first order.
    let mut source: BTreeMap<String, Source<'_>> = BTreeMap::new();
    let mut post: Vec<String> = Vec::new();
    fn visit<'a>(
        item: &str,
        chooser: &mut Chooser<'a>,
        source: &mut BTreeMap<String, Source<'a>>,
        post: &mut Vec<String>,
        done: &mut BTreeSet<String>,
    ) {
        if !done.insert(String::from(item)) {
            return;
        }
        let src = chooser.choose(item).map(|(s, _)| s).unwrap_or(Source::Stock);
        for d in &src.deps() {
            visit(d, chooser, source, post, done);
        }
        source.insert(String::from(item), src);
        post.push(String::from(item));
    }
    let mut done = BTreeSet::new();
    for (t, _) in targets.iter() {
        visit(t, &mut chooser, &mut source, &mut post, &mut done);
    }
    let deps_of = |item: &str| -> Vec<String> { source[item].deps() };

    // Demand, consumers first.
    let mut consumed: BTreeMap<String, u64> = BTreeMap::new();
    let mut durable: BTreeSet<String> = BTreeSet::new();
    for (t, n) in targets.iter() {
        *consumed.entry(String::from(t)).or_insert(0) += u64::from(n);
    }
    let mut made: BTreeMap<String, GoalCall> = BTreeMap::new();
    for item in post.iter().rev() {
        let mut need = consumed.get(item).copied().unwrap_or(0);
        if durable.contains(item) {
            need = need.max(1);
        }
        let net = need.saturating_sub(u64::from(have(item)));
        if net == 0 {
            continue;
        }
        let net = u32::try_from(net).unwrap_or(u32::MAX);
        let call = match source[item.as_str()] {
            Source::Stock => return Err(PlannerError::Unreachable { item: item.clone() }),
            Source::Gather(rule) => {
                let tool = rule.required_tool_item();
                if let Some(t) = &tool {
                    durable.insert(t.clone());
                }
                if rule.is_mob() {
                    GoalCall::kill(item, net, tool.as_deref())
                } else {
                    GoalCall::mine(item, net, tool.as_deref())
                }
            }
            Source::Craft(r) => {
                let batches = r.batches_for(item, net);
                for (input, per) in r.inputs.iter() {
                    *consumed.entry(String::from(input)).or_insert(0) += u64::from(per * batches);
                }
                if let Some(st) = &r.station {
                    durable.insert(st.clone());
                }
                GoalCall::craft(r.outputs.scaled(batches), r.inputs.scaled(batches), r.station.as_deref())
            }
        };
        made.insert(item.clone(), call);
    }

    // Order: dependency level, then the level of the earliest consumer, then
    // consumables before durables, then id.
    let mut level: BTreeMap<&str, u32> = BTreeMap::new();
    for item in &post {
        let l = deps_of(item).iter().map(|d| level.get(d.as_str()).copied().unwrap_or(0) + 1).max().unwrap_or(0);
        level.insert(item.as_str(), l);
    }
    let mut consumer_level: BTreeMap<&str, u32> = BTreeMap::new();
    for item in made.keys() {
        for d in deps_of(item) {
            if let Some((k, _)) = made.get_key_value(d.as_str()) {
                let e = consumer_level.entry(k.as_str()).or_insert(u32::MAX);
                *e = (*e).min(level[item.as_str()]);
            }
        }
    }
    let mut keyed: Vec<((u32, u32, bool, &str), &GoalCall)> = made
        .iter()
        .map(|(item, call)| {
            let key = (
                level[item.as_str()],
                consumer_level.get(item.as_str()).copied().unwrap_or(u32::MAX),
                game.recipes.is_durable(item),
                item.as_str(),
            );
            (key, call)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, c)| c.clone()).collect())
}

/// Backward-chained plan for `task` from the current inventory.
pub fn oracle_plan(task: &TaskSpec, game: &Game, state: &WorldState) -> Result<Plan, PlannerError> {
    let steps = oracle_steps(&task.target, game, state, &|item| state.inventory.get(item))?;
    let mut plan = Plan::new(task.plan_name(&game.recipes), task.primary_target().0);
    plan.steps = steps;
    Ok(plan)
}

/// Replans keep the finished prefix and re-chain the rest from the current state.
#[derive(Debug, Clone, Default)]
pub struct OraclePlanner;

impl Planner for OraclePlanner {
    fn initial_plan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game) -> Result<Plan, PlannerError> {
        oracle_plan(task, game, state)
    }

    fn replan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game, feedback: &Feedback<'_>) -> Result<Plan, PlannerError> {
        // Finished steps stay so the agent can line them up with the old plan.
        let r = feedback.resume_index - 1;
        let mut plan = feedback.plan.clone();
        plan.steps = feedback.plan.steps[..r].to_vec();
        for (i, step) in feedback.plan.steps.iter().enumerate().skip(r) {
            if feedback.completed[i] {
                plan.steps.push(step.clone());
            }
        }
        plan.steps.extend(oracle_steps(&task.target, game, state, &|item| state.inventory.get(item))?);
        Ok(plan)
    }
}
