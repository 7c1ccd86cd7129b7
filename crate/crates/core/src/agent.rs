//! The episode loop: plan, pick a ready goal, run it, and on a dead end
//! describe the situation, explain it and ask for a revised plan.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counts::ItemCounts;
use crate::craftworld::{check_preconditions, execute_goal, task_done, ExecOutcome, ExecStatus, Game, TaskSpec, WorldState};
use crate::descriptor::{describe, ExecTrace};
use crate::explainer::{explain_rule_based, Explanation, FailureKind};
use crate::plan_dsl::{build_goal_graph, render_call, render_plan, GoalCall, GoalGraph, Plan};
use crate::planner::{Feedback, Planner, PlannerError};
use crate::selector::{executable_frontier, HorizonInput, Selector, TrajectoryRecord};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LoopMode {
    /// Plan once and run it; no revisions.
    OneShot,
    /// Revise from the description alone.
    FeedbackOnly,
    /// Description, explanation and revision.
    #[default]
    Deps,
}

/// Stand-in for an unbounded number of rounds.
pub const UNLIMITED_ROUNDS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub mode: LoopMode,
    pub max_rounds: u32,
    /// Extra attempts after a stochastic skill failure before describing it.
    pub max_retries: u32,
    pub record_trajectories: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            mode: LoopMode::Deps,
            max_rounds: UNLIMITED_ROUNDS,
            max_retries: 2,
            record_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cause", rename_all = "snake_case")]
pub enum FailureCause {
    StepBudget,
    /// Stuck with no rounds left. `kind` is the last diagnosis, if any.
    RoundsExhausted { step: Option<usize>, kind: Option<FailureKind> },
    /// A one-shot run reached a step it could not run.
    Stuck { step: Option<usize>, kind: Option<FailureKind> },
    Planner { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Milestone {
    pub item: String,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task_id: String,
    pub seed: u64,
    pub success: bool,
    pub steps_used: u64,
    pub rounds_used: u32,
    pub milestones: Vec<Milestone>,
    pub final_inventory: ItemCounts,
    pub failure_cause: Option<FailureCause>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trajectories: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepContext {
    /// Revision count of the plan being run, 0 for the first plan.
    pub round: u32,
    /// 1-based plan step.
    pub step: usize,
}

/// Runs goals against the world. Tests swap this to script side effects.
pub trait Executor {
    fn execute(&mut self, state: &mut WorldState, goal: &GoalCall, ctx: StepContext, game: &Game) -> ExecOutcome;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WorldExecutor;

impl Executor for WorldExecutor {
    fn execute(&mut self, state: &mut WorldState, goal: &GoalCall, _ctx: StepContext, game: &Game) -> ExecOutcome {
        execute_goal(state, goal, game)
    }
}

/// Inventory changes applied after a given step succeeds, for replaying
/// recorded episodes where the player picked things up along the way.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pickup {
    pub round: u32,
    pub step: usize,
    /// Applied before `add`.
    #[serde(default)]
    pub remove: ItemCounts,
    #[serde(default)]
    pub add: ItemCounts,
}

/// Wraps another executor and applies scripted pickups.
#[derive(Debug, Clone, Default)]
pub struct ScriptedExecutor<E> {
    pub inner: E,
    pub pickups: Vec<Pickup>,
}

impl<E: Executor> Executor for ScriptedExecutor<E> {
    fn execute(&mut self, state: &mut WorldState, goal: &GoalCall, ctx: StepContext, game: &Game) -> ExecOutcome {
        let out = self.inner.execute(state, goal, ctx, game);
        if out.success() {
            for p in self.pickups.iter().filter(|p| p.round == ctx.round && p.step == ctx.step) {
                for (item, n) in p.remove.iter() {
                    let have = state.inventory.get(item);
                    let _ = state.inventory.remove(item, n.min(have));
                }
                for (item, n) in p.add.iter() {
                    state.inventory.add(item, n);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Plan { round: u32, text: String },
    PlanError { round: u32, message: String },
    Select { round: u32, step: usize, goal: String, frontier: Vec<usize> },
    Exec { round: u32, step: usize, goal: String, status: ExecStatus, steps_used: u64, clock: u64 },
    Describe { round: u32, lines: Vec<String> },
    Explain { round: u32, text: String },
    Finish { success: bool, steps_used: u64, rounds_used: u32 },
}

pub trait EventSink {
    fn record(&mut self, event: Event);
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NullSink;

impl EventSink for NullSink {
    fn record(&mut self, _event: Event) {}
}

impl EventSink for Vec<Event> {
    fn record(&mut self, event: Event) {
        self.push(event);
    }
}

/// Precedence graph for `plan`, or a plain chain when the plan names items
/// the recipe book does not know.
pub fn plan_graph(plan: &Plan, task: &TaskSpec, game: &Game) -> GoalGraph {
    build_goal_graph(plan, &game.recipes, &task.alternatives).unwrap_or_else(|_| {
        let n = plan.steps.len();
        GoalGraph {
            parents: (0..n).map(|i| if i == 0 { vec![] } else { vec![i - 1] }).collect(),
            edges: (1..n).map(|i| (i - 1, i)).collect(),
            and_groups: (0..n).map(|i| vec![i]).collect(),
            or_groups: Vec::new(),
        }
    })
}

/// Which steps of `new` count as already done. Steps before the resume point
/// are done; later ones are done if they repeat, statement for statement, a
/// finished old step from that point on (each old step used once).
pub fn carry_completion(old: &Plan, old_complete: &[bool], resume: usize, new: &Plan) -> Vec<bool> {
    let mut pool: Vec<Option<String>> = old
        .steps
        .iter()
        .enumerate()
        .skip(resume)
        .filter(|(i, _)| old_complete[*i])
        .map(|(_, s)| Some(render_call(s)))
        .collect();
    new.steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if i < resume {
                return true;
            }
            let text = render_call(s);
            match pool.iter_mut().find(|p| p.as_deref() == Some(text.as_str())) {
                Some(slot) => {
                    *slot = None;
                    true
                }
                None => false,
            }
        })
        .collect()
}

struct Run<'a> {
    task: &'a TaskSpec,
    state: WorldState,
    seen: BTreeSet<String>,
    milestones: Vec<Milestone>,
}

impl Run<'_> {
    fn note_milestones(&mut self) {
        let tracked = &self.task.milestones;
        let fresh: Vec<String> = self
            .state
            .inventory
            .iter()
            .filter(|(k, n)| *n > 0 && !self.seen.contains(*k) && (tracked.is_empty() || tracked.iter().any(|t| t == k)))
            .map(|(k, _)| k.to_string())
            .collect();
        for item in fresh {
            self.seen.insert(item.clone());
            self.milestones.push(Milestone {
                item,
                step: self.state.steps_elapsed,
            });
        }
    }
}

/// One episode from a fresh world. Never panics on planner or world
/// failures; they end up in `failure_cause`.
pub fn run_episode(
    task: &TaskSpec,
    seed: u64,
    game: &Game,
    planner: &mut dyn Planner,
    selector: &Selector,
    config: &AgentConfig,
    executor: &mut dyn Executor,
    sink: &mut dyn EventSink,
) -> EpisodeResult {
    let state = match game.reset(seed, task) {
        Ok(s) => s,
        Err(e) => {
            return EpisodeResult {
                task_id: task.id.clone(),
                seed,
                success: false,
                steps_used: 0,
                rounds_used: 0,
                milestones: Vec::new(),
                final_inventory: ItemCounts::new(),
                failure_cause: Some(FailureCause::Planner { message: e.to_string() }),
                trajectories: Vec::new(),
            }
        }
    };
    let mut run = Run {
        task,
        state,
        seen: BTreeSet::new(),
        milestones: Vec::new(),
    };
    run.note_milestones();
    let mut sel_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, 0, seeds::SELECTOR));
    let max_rounds = if config.mode == LoopMode::OneShot { 0 } else { config.max_rounds };
    let mut rounds: u32 = 0;
    let mut trajectories = Vec::new();
    let mut cause: Option<FailureCause> = None;

    let mut plan = match planner.initial_plan(task, &run.state, game) {
        Ok(p) => p,
        Err(PlannerError::PlanParseFailure { reason, .. }) => {
            sink.record(Event::PlanError { round: 0, message: reason });
            Plan::new(task.plan_name(&game.recipes), task.primary_target().0)
        }
        Err(e) => {
            cause = Some(FailureCause::Planner { message: e.to_string() });
            Plan::new(task.plan_name(&game.recipes), task.primary_target().0)
        }
    };
    if cause.is_none() {
        sink.record(Event::Plan {
            round: 0,
            text: render_plan(&plan),
        });
    }
    let mut complete = vec![false; plan.steps.len()];
    let mut graph = plan_graph(&plan, task, game);
    let mut succeeded: Vec<usize> = Vec::new();

    while cause.is_none() {
        if task_done(&run.state, task) {
            break;
        }
        if run.state.steps_elapsed >= run.state.step_cap {
            cause = Some(FailureCause::StepBudget);
            break;
        }
        let frontier = executable_frontier(&graph, &plan, &complete, &run.state, game);
        let failed: Option<usize>;
        if !frontier.is_empty() {
            let i = selector
                .choose(&frontier, &plan, &run.state, game, &mut sel_rng)
                .expect("frontier is non-empty");
            let goal = plan.steps[i].clone();
            sink.record(Event::Select {
                round: rounds,
                step: i + 1,
                goal: goal.goal_id(),
                frontier: frontier.iter().map(|f| f + 1).collect(),
            });
            let start = run.state.steps_elapsed;
            let input = config.record_trajectories.then(|| HorizonInput::new(&run.state, &goal, game));
            let mut outcome = None;
            for _ in 0..=config.max_retries {
                let ctx = StepContext { round: rounds, step: i + 1 };
                let out = executor.execute(&mut run.state, &goal, ctx, game);
                sink.record(Event::Exec {
                    round: rounds,
                    step: i + 1,
                    goal: render_call(&goal),
                    status: out.status,
                    steps_used: out.steps_used,
                    clock: run.state.steps_elapsed,
                });
                run.note_milestones();
                let retry = out.status == ExecStatus::SkillFailure;
                outcome = Some(out.status);
                if !retry {
                    break;
                }
            }
            match outcome.expect("at least one attempt") {
                ExecStatus::Success => {
                    complete[i] = true;
                    succeeded.push(i + 1);
                    if let Some(input) = input {
                        trajectories.push(TrajectoryRecord {
                            input,
                            horizon: run.state.steps_elapsed - start,
                            episode: seed,
                        });
                    }
                    continue;
                }
                ExecStatus::BudgetExceeded => {
                    cause = Some(FailureCause::StepBudget);
                    break;
                }
                ExecStatus::SkillFailure | ExecStatus::PreconditionFailed => {
                    if config.mode == LoopMode::OneShot {
                        cause = Some(FailureCause::Stuck {
                            step: Some(i + 1),
                            kind: None,
                        });
                        break;
                    }
                    failed = Some(i);
                }
            }
        } else {
            // Dead end: the earliest ready step that cannot run, if any.
            failed = graph.ready(&complete).into_iter().find(|&i| {
                !graph.or_group_of(i).map(|g| g.iter().any(|&m| complete[m])).unwrap_or(false)
                    && check_preconditions(&run.state, &plan.steps[i], game).is_err()
            });
        }

        let exhausted = failed.is_none() && complete.iter().all(|c| *c);
        let trace = ExecTrace {
            succeeded_steps: core::mem::take(&mut succeeded),
            failed_step: failed.map(|i| (i + 1, render_call(&plan.steps[i]))),
            round_id: rounds as usize,
            task_complete: false,
            plan_exhausted: exhausted,
        };
        let lines = describe(&run.state, &trace);
        sink.record(Event::Describe {
            round: rounds,
            lines: lines.clone(),
        });
        let diagnosis = failed.and_then(|i| check_preconditions(&run.state, &plan.steps[i], game).err());
        if rounds >= max_rounds {
            let step = failed.map(|i| i + 1);
            cause = Some(if config.mode == LoopMode::OneShot {
                FailureCause::Stuck { step, kind: diagnosis }
            } else {
                FailureCause::RoundsExhausted { step, kind: diagnosis }
            });
            break;
        }

        let resume = complete.iter().position(|c| !c).unwrap_or(complete.len());
        let mut fb = Feedback {
            plan: &plan,
            description: &lines,
            explanation: None,
            failed_step: failed.map(|i| i + 1),
            resume_index: resume + 1,
            completed: &complete,
            mode: config.mode,
            round: rounds as usize + 1,
        };
        let mut explanation: Option<Explanation> = None;
        if config.mode == LoopMode::Deps {
            explanation = match planner.explain(task, &run.state, game, &fb) {
                Some(Ok(e)) => Some(e),
                Some(Err(PlannerError::PlanParseFailure { .. })) => None,
                Some(Err(e)) => {
                    cause = Some(FailureCause::Planner { message: e.to_string() });
                    break;
                }
                None => failed.and_then(|i| explain_rule_based(i + 1, &plan.steps[i], &run.state, game).ok()),
            };
            if let Some(e) = &explanation {
                sink.record(Event::Explain {
                    round: rounds,
                    text: e.rendered.clone(),
                });
            }
        }
        fb.explanation = explanation.as_ref();
        let revised = planner.replan(task, &run.state, game, &fb);
        rounds += 1;
        match revised {
            Ok(new_plan) => {
                complete = carry_completion(&plan, &complete, resume, &new_plan);
                plan = new_plan;
                graph = plan_graph(&plan, task, game);
                sink.record(Event::Plan {
                    round: rounds,
                    text: render_plan(&plan),
                });
            }
            Err(PlannerError::PlanParseFailure { reason, .. }) => {
                sink.record(Event::PlanError { round: rounds, message: reason });
            }
            Err(e) => {
                cause = Some(FailureCause::Planner { message: e.to_string() });
            }
        }
    }

    let success = cause.is_none() && task_done(&run.state, task);
    sink.record(Event::Finish {
        success,
        steps_used: run.state.steps_elapsed,
        rounds_used: rounds,
    });
    if success && !succeeded.is_empty() {
        let trace = ExecTrace {
            succeeded_steps: succeeded,
            task_complete: true,
            round_id: rounds as usize,
            ..ExecTrace::default()
        };
        sink.record(Event::Describe {
            round: rounds,
            lines: describe(&run.state, &trace),
        });
    }
    EpisodeResult {
        task_id: task.id.clone(),
        seed,
        success,
        steps_used: run.state.steps_elapsed,
        rounds_used: rounds,
        milestones: run.milestones,
        final_inventory: run.state.inventory.counts().clone(),
        failure_cause: if success { None } else { cause.or(Some(FailureCause::StepBudget)) },
        trajectories,
    }
}

/// Short label for a failure cause, for reports.
pub fn cause_label(cause: &FailureCause) -> String {
    match cause {
        FailureCause::StepBudget => String::from("step_budget"),
        FailureCause::RoundsExhausted { kind, .. } => format!("rounds_exhausted:{}", kind.as_ref().map(|k| k.label()).unwrap_or("none")),
        FailureCause::Stuck { kind, .. } => format!("stuck:{}", kind.as_ref().map(|k| k.label()).unwrap_or("skill_failure")),
        FailureCause::Planner { .. } => String::from("planner"),
    }
}
