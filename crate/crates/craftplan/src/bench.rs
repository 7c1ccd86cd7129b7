//! Monte-Carlo runs over a task suite and the ablations built on them.

use std::path::Path;
use std::sync::Arc;

use craftplan_core::agent::{run_episode, AgentConfig, EpisodeResult, EventSink, LoopMode, NullSink, WorldExecutor};
use craftplan_core::counts::ItemCounts;
use craftplan_core::craftworld::{CostModel, Game, MineRule, RecipeDb, SkillCatalog, SkillProfile, TaskSpec, WorldConfig, WorldState};
use craftplan_core::plan_dsl::{GoalCall, GoalVerb, Plan};
use craftplan_core::planner::{
    oracle_plan, ChatEndpoint, ChatMessage, EndpointError, FaultyPlanner, Feedback, LlmPlanner, OraclePlanner, Planner, PlannerError,
    ReplayEndpoint,
};
use craftplan_core::selector::{train_horizon, HorizonModel, Selector, SelectorKind, TrainConfig, TrajectoryRecord};
use craftplan_core::stats::{binomial_ci95, mean, sample_std};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{PlannerKind, RunConfig};
use crate::data::{DataError, DataSet, Transcript};
use crate::http::HttpEndpoint;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("the hps selector needs a model checkpoint or train_selector = true")]
    MissingModel,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("cannot load model {path}: {reason}")]
    BadModel { path: String, reason: String },
    #[error("selector training failed: {0}")]
    Training(String),
    #[error("llm endpoint: {0}")]
    Endpoint(#[from] EndpointError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Data named by the config, with its world settings applied.
pub fn load_data(cfg: &RunConfig) -> Result<DataSet, DataError> {
    let data = match &cfg.data_dir {
        Some(d) => DataSet::load_dir(d, cfg.world.clone())?,
        None => DataSet::embedded(cfg.world.clone())?,
    };
    let data = match &cfg.suite {
        Some(s) => data.with_suite(s)?,
        None => data,
    };
    data.select(&cfg.tasks)
}

#[derive(Debug, Clone)]
pub enum Endpoint {
    Replay(ReplayEndpoint),
    Http(HttpEndpoint),
}

impl ChatEndpoint for Endpoint {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, EndpointError> {
        match self {
            Endpoint::Replay(e) => e.complete(messages),
            Endpoint::Http(e) => e.complete(messages),
        }
    }
}

/// Everything an episode needs besides its task and seed. Built once per run
/// so config and data errors surface before any episode starts.
pub struct Harness {
    pub data: DataSet,
    pub agent: AgentConfig,
    pub planner: PlannerKind,
    pub faults: craftplan_core::planner::FaultConfig,
    pub selector: Selector,
    pub endpoint: Option<Endpoint>,
    pub token_cap: usize,
    pub model_explains: bool,
    pub workers: usize,
}

impl Harness {
    pub fn new(cfg: &RunConfig) -> Result<Self, BenchError> {
        cfg.validate().map_err(|e| BenchError::Training(e.to_string()))?;
        let data = load_data(cfg)?;
        let endpoint = match cfg.planner {
            PlannerKind::Llm => Some(match &cfg.llm.transcript {
                Some(p) => Endpoint::Replay(ReplayEndpoint::new(Transcript::load(p)?.replies)),
                None => {
                    let mut e = HttpEndpoint::from_env()?;
                    e.temperature = cfg.llm.temperature;
                    Endpoint::Http(e)
                }
            }),
            _ => None,
        };
        let selector = build_selector(cfg, &data)?;
        Ok(Self {
            agent: cfg.agent(),
            planner: cfg.planner,
            faults: cfg.faults,
            selector,
            endpoint,
            token_cap: cfg.llm.token_cap,
            model_explains: cfg.llm.model_explains,
            workers: cfg.workers,
            data,
        })
    }

    fn make_planner(&self, seed: u64) -> Box<dyn Planner> {
        match self.planner {
            PlannerKind::Oracle => Box::new(OraclePlanner),
            PlannerKind::Faulty => Box::new(FaultyPlanner::new(self.faults, seed)),
            PlannerKind::Llm => {
                let endpoint = self.endpoint.clone().expect("llm harness has an endpoint");
                let mut p = LlmPlanner::new(endpoint, self.token_cap);
                p.model_explains = self.model_explains;
                Box::new(p)
            }
        }
    }

    pub fn episode(&self, task: &TaskSpec, seed: u64, sink: &mut dyn EventSink) -> EpisodeResult {
        let mut planner = self.make_planner(seed);
        run_episode(task, seed, &self.data.game, planner.as_mut(), &self.selector, &self.agent, &mut WorldExecutor, sink)
    }

    /// Runs `jobs` (task index, seed) on the worker pool. Output order is
    /// job order whatever the thread count.
    pub fn run_jobs(&self, jobs: &[(usize, u64)]) -> Result<Vec<EpisodeResult>, BenchError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| BenchError::Pool(e.to_string()))?;
        Ok(pool.install(|| {
            jobs.par_iter()
                .map(|&(t, seed)| self.episode(&self.data.tasks[t], seed, &mut NullSink))
                .collect()
        }))
    }
}

/// Task-major job list; episode `e` of every task uses seed `seed_base + e`.
pub fn suite_jobs(tasks: usize, episodes: usize, seed_base: u64) -> Vec<(usize, u64)> {
    (0..tasks)
        .flat_map(|t| (0..episodes).map(move |e| (t, seed_base + e as u64)))
        .collect()
}

pub fn load_model(path: &Path) -> Result<HorizonModel, BenchError> {
    let bad = |reason: String| BenchError::BadModel {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| bad(e.to_string()))
}

pub fn build_selector(cfg: &RunConfig, data: &DataSet) -> Result<Selector, BenchError> {
    Ok(match cfg.selector {
        SelectorKind::Fixed => Selector::Fixed,
        SelectorKind::Random => Selector::Random,
        SelectorKind::Similarity => Selector::Similarity,
        SelectorKind::Hps => {
            let model = match (&cfg.model, cfg.train_selector) {
                (Some(p), _) => load_model(p)?,
                (None, true) => {
                    let seed = cfg.seed_base.wrapping_add(TRAIN_SEED_OFFSET);
                    let records = collect_trajectories(&data.game, &data.tasks, &oracle_for, cfg.train_episodes, seed, cfg.workers)?;
                    train_model(&records, &data.game, &data.tasks, &TrainConfig::default())?
                }
                (None, false) => return Err(BenchError::MissingModel),
            };
            Selector::Hps {
                model: Arc::new(model),
                mode: cfg.select_mode,
            }
        }
    })
}

/// Training rollouts use seeds far from any evaluation seed base.
pub const TRAIN_SEED_OFFSET: u64 = 1 << 40;

fn oracle_for(_seed: u64) -> Box<dyn Planner> {
    Box::new(OraclePlanner)
}

/// Random-selector rollouts with trajectory logging. Episode `i` runs task
/// `i mod tasks` with seed `seed_base + i`.
pub fn collect_trajectories(
    game: &Game,
    tasks: &[TaskSpec],
    planner: &(dyn Fn(u64) -> Box<dyn Planner> + Sync),
    episodes: usize,
    seed_base: u64,
    workers: usize,
) -> Result<Vec<TrajectoryRecord>, BenchError> {
    let agent = AgentConfig {
        record_trajectories: true,
        ..AgentConfig::default()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let per_episode: Vec<Vec<TrajectoryRecord>> = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|i| {
                let seed = seed_base + i as u64;
                let mut p = planner(seed);
                run_episode(&tasks[i % tasks.len()], seed, game, p.as_mut(), &Selector::Random, &agent, &mut WorldExecutor, &mut NullSink)
                    .trajectories
                    .into_iter()
                    .map(|mut r| {
                        r.episode = i as u64;
                        r
                    })
                    .collect()
            })
            .collect()
    });
    Ok(per_episode.into_iter().flatten().collect())
}

/// Goal ids of the oracle plans for `tasks`, so every goal the selector may
/// see has its own feature even if training never reached it.
pub fn plan_goals(game: &Game, tasks: &[TaskSpec]) -> Vec<String> {
    let mut goals: Vec<String> = Vec::new();
    for t in tasks {
        let Ok(state) = game.reset(0, t) else { continue };
        if let Ok(plan) = oracle_plan(t, game, &state) {
            goals.extend(plan.steps.iter().map(GoalCall::goal_id));
        }
    }
    goals.sort();
    goals.dedup();
    goals
}

pub fn train_model(records: &[TrajectoryRecord], game: &Game, tasks: &[TaskSpec], config: &TrainConfig) -> Result<HorizonModel, BenchError> {
    train_horizon(records, &plan_goals(game, tasks), config).map_err(|e| BenchError::Training(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub tasks: Vec<TaskSpec>,
    pub results: Vec<EpisodeResult>,
}

pub fn run_suite(cfg: &RunConfig) -> Result<SuiteRun, BenchError> {
    let h = Harness::new(cfg)?;
    let jobs = suite_jobs(h.data.tasks.len(), cfg.episodes, cfg.seed_base);
    let results = h.run_jobs(&jobs)?;
    Ok(SuiteRun {
        tasks: h.data.tasks.clone(),
        results,
    })
}

pub const ROUND_SETTINGS: [u32; 5] = [0, 1, 3, 5, 64];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundsRow {
    pub meta_group: String,
    pub episodes: usize,
    /// Percent success per entry of the rounds list.
    pub success: Vec<f64>,
    /// Last setting minus the first.
    pub delta: f64,
}

#[derive(Debug, Clone)]
pub struct RoundsAblation {
    pub rounds: Vec<u32>,
    pub rows: Vec<RoundsRow>,
    /// Raw results per setting, in job order.
    pub results: Vec<Vec<EpisodeResult>>,
}

/// The same jobs and seeds under each rounds cap. Rows follow meta group
/// order, with an `all` row last.
pub fn ablate_rounds(cfg: &RunConfig, rounds: &[u32]) -> Result<RoundsAblation, BenchError> {
    let mut base = Harness::new(cfg)?;
    let jobs = suite_jobs(base.data.tasks.len(), cfg.episodes, cfg.seed_base);
    let mut results = Vec::with_capacity(rounds.len());
    for &r in rounds {
        base.agent.mode = LoopMode::Deps;
        base.agent.max_rounds = r;
        results.push(base.run_jobs(&jobs)?);
    }
    let mut groups: Vec<String> = base.data.tasks.iter().map(|t| t.meta_group.clone()).collect();
    groups.sort();
    groups.dedup();
    groups.push("all".to_string());
    let rows = groups
        .iter()
        .map(|g| {
            let pick: Vec<usize> = jobs
                .iter()
                .enumerate()
                .filter(|(_, (t, _))| g == "all" || base.data.tasks[*t].meta_group == *g)
                .map(|(i, _)| i)
                .collect();
            let success: Vec<f64> = results
                .iter()
                .map(|rs| 100.0 * pick.iter().filter(|&&i| rs[i].success).count() as f64 / pick.len() as f64)
                .collect();
            RoundsRow {
                meta_group: g.clone(),
                episodes: pick.len(),
                delta: success.last().copied().unwrap_or(0.0) - success.first().copied().unwrap_or(0.0),
                success,
            }
        })
        .collect();
    Ok(RoundsAblation {
        rounds: rounds.to_vec(),
        rows,
        results,
    })
}

// Selector ablation world: a few parallel gathering goals that share no
// prerequisites. Mobs start close and wander off over time, turning up again
// far away; the other resources are far but stay put. Picking the close,
// short goals first is what a good selector should learn.

pub const SELECTOR_GOALS: [usize; 3] = [2, 3, 4];
pub const SELECTOR_BUDGETS: [u64; 4] = [500, 1000, 2000, 10_000];
/// Goal pool; a k-goal task takes the first k.
const POOL: [&str; 4] = ["mutton", "log", "beef", "stone"];

pub fn selector_game() -> Game {
    let mob = |item: &str, mob: &str| MineRule {
        item: item.to_string(),
        required_tier: Default::default(),
        required_tool: None,
        host_biomes: vec!["plains".to_string()],
        distance_range: [10.0, 40.0],
        mob: Some(mob.to_string()),
        skill_item: None,
        respawn_distance_range: Some([2400.0, 4000.0]),
    };
    let node = |item: &str, lo: f64, hi: f64| MineRule {
        item: item.to_string(),
        required_tier: Default::default(),
        required_tool: None,
        host_biomes: vec!["plains".to_string()],
        distance_range: [lo, hi],
        mob: None,
        skill_item: None,
        respawn_distance_range: None,
    };
    let skill = |id: &str, verb: GoalVerb, target: &str| SkillProfile {
        id: id.to_string(),
        description: format!("{id} skill"),
        verb,
        target_item: Some(target.to_string()),
        tool: None,
        success_prob: 1.0,
        max_steps: 100,
    };
    let rules = vec![
        mob("mutton", "sheep"),
        mob("beef", "cow"),
        node("log", 400.0, 700.0),
        node("stone", 500.0, 800.0),
    ];
    let skills = vec![
        skill("kill_sheep", GoalVerb::Kill, "sheep"),
        skill("kill_cow", GoalVerb::Kill, "cow"),
        skill("mine_log", GoalVerb::Mine, "log"),
        skill("mine_stone", GoalVerb::Mine, "stone"),
    ];
    let world = WorldConfig {
        biomes: vec!["plains".to_string()],
        travel_speed: 4.0,
        despawn_per_step: 0.004,
        far_sentinel: 1e6,
        cost: CostModel::default(),
        success_override: None,
    };
    Game::new(RecipeDb::new(Vec::new(), rules).expect("static rules"), SkillCatalog::new(skills), world)
}

pub fn selector_task(goals: usize, budget: u64) -> TaskSpec {
    let target: ItemCounts = POOL[..goals].iter().map(|i| (*i, 1)).collect();
    TaskSpec {
        target,
        milestones: POOL[..goals].iter().map(|s| s.to_string()).collect(),
        ..TaskSpec::new(&format!("Gather{goals}"), POOL[0], 1, budget, "parallel")
    }
}

/// One gathering step per target item, static resources first. That order
/// is the worst one for the fixed selector, which runs plan order.
pub struct FarFirstPlanner;

impl FarFirstPlanner {
    fn plan(task: &TaskSpec, game: &Game) -> Plan {
        let mut steps: Vec<GoalCall> = task
            .target
            .iter()
            .map(|(item, n)| match game.recipes.mine_rule(item) {
                Some(r) if r.is_mob() => GoalCall::kill(item, n, None),
                _ => GoalCall::mine(item, n, None),
            })
            .collect();
        steps.sort_by_key(|s| s.verb == GoalVerb::Kill);
        let mut plan = Plan::new(format!("gather_{}", task.target.len()), task.primary_target().0);
        plan.steps = steps;
        plan
    }
}

impl Planner for FarFirstPlanner {
    fn initial_plan(&mut self, task: &TaskSpec, _state: &WorldState, game: &Game) -> Result<Plan, PlannerError> {
        Ok(Self::plan(task, game))
    }

    fn replan(&mut self, _task: &TaskSpec, _state: &WorldState, _game: &Game, fb: &Feedback<'_>) -> Result<Plan, PlannerError> {
        Ok(fb.plan.clone())
    }
}

fn far_first(_seed: u64) -> Box<dyn Planner> {
    Box::new(FarFirstPlanner)
}

/// Horizon model for the selector world, fitted on random-selector rollouts
/// of the largest task with a loose budget.
/// Goal ids of the full selector-world plan, in plan order.
pub fn selector_world_goals() -> Vec<String> {
    FarFirstPlanner::plan(&selector_task(POOL.len(), 20_000), &selector_game())
        .steps
        .iter()
        .map(GoalCall::goal_id)
        .collect()
}

/// Random-selector rollouts of the full selector-world task.
pub fn selector_world_trajectories(episodes: usize, seed_base: u64, workers: usize) -> Result<Vec<TrajectoryRecord>, BenchError> {
    let tasks = vec![selector_task(POOL.len(), 20_000)];
    collect_trajectories(&selector_game(), &tasks, &far_first, episodes, seed_base, workers)
}

pub fn train_selector_world(episodes: usize, seed_base: u64, workers: usize) -> Result<(HorizonModel, Vec<TrajectoryRecord>), BenchError> {
    let records = selector_world_trajectories(episodes, seed_base, workers)?;
    let model = train_horizon(&records, &selector_world_goals(), &TrainConfig::default()).map_err(|e| BenchError::Training(e.to_string()))?;
    Ok((model, records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorRow {
    pub selector: String,
    pub goals: usize,
    pub budget: u64,
    pub episodes: usize,
    pub success_rate: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub mean_steps: f64,
    pub steps_std: f64,
}

#[derive(Debug, Clone)]
pub struct SelectorCell {
    pub row: SelectorRow,
    pub results: Vec<EpisodeResult>,
}

pub fn selector_name(s: &Selector) -> &'static str {
    match s.kind() {
        SelectorKind::Fixed => "fixed",
        SelectorKind::Random => "random",
        SelectorKind::Similarity => "similarity",
        SelectorKind::Hps => "hps",
    }
}

/// Every selector on every (goal count, budget) cell over the same seeds.
pub fn ablate_selector(
    selectors: &[Selector],
    goals: &[usize],
    budgets: &[u64],
    episodes: usize,
    seed_base: u64,
    workers: usize,
) -> Result<Vec<SelectorCell>, BenchError> {
    let game = selector_game();
    let agent = AgentConfig::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let mut cells = Vec::new();
    for sel in selectors {
        for &k in goals {
            for &budget in budgets {
                let task = selector_task(k, budget);
                let results: Vec<EpisodeResult> = pool.install(|| {
                    (0..episodes)
                        .into_par_iter()
                        .map(|e| {
                            run_episode(&task, seed_base + e as u64, &game, &mut FarFirstPlanner, sel, &agent, &mut WorldExecutor, &mut NullSink)
                        })
                        .collect()
                });
                let wins = results.iter().filter(|r| r.success).count();
                let (lo, hi) = binomial_ci95(wins, episodes);
                let steps: Vec<f64> = results.iter().map(|r| r.steps_used as f64).collect();
                cells.push(SelectorCell {
                    row: SelectorRow {
                        selector: selector_name(sel).to_string(),
                        goals: k,
                        budget,
                        episodes,
                        success_rate: 100.0 * wins as f64 / episodes as f64,
                        ci95_low: 100.0 * lo,
                        ci95_high: 100.0 * hi,
                        mean_steps: mean(&steps),
                        steps_std: sample_std(&steps),
                    },
                    results,
                });
            }
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub ok: bool,
    /// 1-based step that could not run.
    pub failed_step: Option<usize>,
    pub reason: Option<String>,
    pub final_inventory: ItemCounts,
}

/// Runs `plan` in order with every skill succeeding, nothing despawning and
/// no step cap. `ok` means each step ran and the task target was reached.
pub fn symbolic_check(plan: &Plan, task: &TaskSpec, game: &Game) -> Validation {
    let mut sure = game.clone();
    sure.world.success_override = Some(1.0);
    sure.world.despawn_per_step = 0.0;
    let mut task = task.clone();
    task.max_episode_steps = u64::MAX;
    if task.biome.is_none() {
        task.biome = sure.world.biomes.first().cloned();
    }
    let mut state = match sure.reset(0, &task) {
        Ok(s) => s,
        Err(e) => {
            return Validation {
                ok: false,
                failed_step: None,
                reason: Some(e.to_string()),
                final_inventory: ItemCounts::new(),
            }
        }
    };
    for (i, step) in plan.steps.iter().enumerate() {
        let out = craftplan_core::craftworld::execute_goal(&mut state, step, &sure);
        if !out.success() {
            return Validation {
                ok: false,
                failed_step: Some(i + 1),
                reason: Some(out.failure.map(|f| f.render()).unwrap_or_else(|| format!("{:?}", out.status))),
                final_inventory: state.inventory.counts().clone(),
            };
        }
    }
    let done = craftplan_core::craftworld::task_done(&state, &task);
    Validation {
        ok: done,
        failed_step: None,
        reason: (!done).then(|| "plan ends before the target is held".to_string()),
        final_inventory: state.inventory.counts().clone(),
    }
}
