//! Picks which ready goal to run next. The learned selector prefers goals
//! expected to finish soonest; the baselines are for comparison.

mod model;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::craftworld::{check_preconditions, Game, WorldState};
use crate::plan_dsl::{describe_call, GoalGraph, Plan};
use crate::similarity::best_match;

pub use model::{
    gradient_check, log_edges, train_horizon, FeatureSpec, HorizonInput, HorizonModel, ModelError, TargetEncoding,
    TrainConfig, TrainingMeta, TrajectoryRecord, BUCKETS, MAX_HORIZON, MIN_HORIZON,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectorError {
    #[error("no executable goal to choose from")]
    EmptyCandidates,
}

/// Incomplete steps whose parents are done and whose preconditions hold now.
/// Once one member of an OR group is done its siblings drop out.
pub fn executable_frontier(graph: &GoalGraph, plan: &Plan, complete: &[bool], state: &WorldState, game: &Game) -> Vec<usize> {
    graph
        .ready(complete)
        .into_iter()
        .filter(|&i| !graph.or_group_of(i).map(|g| g.iter().any(|&m| complete[m])).unwrap_or(false))
        .filter(|&i| check_preconditions(state, &plan.steps[i], game).is_ok())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalDistribution {
    pub candidates: Vec<String>,
    /// Plan positions of the candidates, parallel to `candidates`.
    pub steps: Vec<usize>,
    pub probs: Vec<f64>,
    pub mu_values: Vec<f64>,
}

impl GoalDistribution {
    /// probs ∝ exp(−μ), shifted by the minimum μ before exponentiating.
    pub fn from_mu(candidates: Vec<String>, steps: Vec<usize>, mu_values: Vec<f64>) -> Result<Self, SelectorError> {
        if mu_values.is_empty() {
            return Err(SelectorError::EmptyCandidates);
        }
        let min = mu_values.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = mu_values.iter().map(|m| libm::exp(-(m - min))).collect();
        let s: f64 = w.iter().sum();
        Ok(Self {
            candidates,
            steps,
            probs: w.into_iter().map(|x| x / s).collect(),
            mu_values,
        })
    }

    /// Lowest μ; ties go to the smaller goal id, then the earlier candidate.
    pub fn argmin_mu(&self) -> usize {
        (0..self.mu_values.len())
            .min_by(|&a, &b| {
                self.mu_values[a]
                    .partial_cmp(&self.mu_values[b])
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| self.candidates[a].cmp(&self.candidates[b]))
                    .then(a.cmp(&b))
            })
            .unwrap_or(0)
    }
}

/// μ for each frontier step. Goals the model has no features for get the
/// untrained prior (mean bucket midpoint).
pub fn goal_distribution(model: &HorizonModel, state: &WorldState, plan: &Plan, frontier: &[usize], game: &Game) -> Result<GoalDistribution, SelectorError> {
    let mids = model.midpoints();
    let prior = mids.iter().sum::<f64>() / mids.len() as f64;
    let mut ids = Vec::with_capacity(frontier.len());
    let mut mus = Vec::with_capacity(frontier.len());
    for &i in frontier {
        let input = HorizonInput::new(state, &plan.steps[i], game);
        mus.push(model.predict(&input).unwrap_or(prior));
        ids.push(input.goal_id);
    }
    GoalDistribution::from_mu(ids, frontier.to_vec(), mus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectMode {
    #[default]
    Sample,
    Argmax,
}

/// Index into the distribution's candidates.
pub fn select(dist: &GoalDistribution, rng: &mut ChaCha8Rng, mode: SelectMode) -> usize {
    match mode {
        SelectMode::Argmax => dist.argmin_mu(),
        SelectMode::Sample => {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (i, p) in dist.probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            dist.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorKind {
    Fixed,
    Random,
    Similarity,
    Hps,
}

#[derive(Debug, Clone)]
pub enum Selector {
    /// Lowest plan position.
    Fixed,
    Random,
    /// Goal description closest to the state summary.
    Similarity,
    Hps { model: Arc<HorizonModel>, mode: SelectMode },
}

impl Selector {
    pub fn kind(&self) -> SelectorKind {
        match self {
            Selector::Fixed => SelectorKind::Fixed,
            Selector::Random => SelectorKind::Random,
            Selector::Similarity => SelectorKind::Similarity,
            Selector::Hps { .. } => SelectorKind::Hps,
        }
    }

    /// The chosen plan position.
    pub fn choose(&self, frontier: &[usize], plan: &Plan, state: &WorldState, game: &Game, rng: &mut ChaCha8Rng) -> Result<usize, SelectorError> {
        if frontier.is_empty() {
            return Err(SelectorError::EmptyCandidates);
        }
        Ok(match self {
            Selector::Fixed => *frontier.iter().min().expect("non-empty"),
            Selector::Random => frontier[rng.random_range(0..frontier.len())],
            Selector::Similarity => {
                let texts: Vec<String> = frontier.iter().map(|&i| describe_call(&plan.steps[i])).collect();
                let summary = state.summary();
                let (k, _) = best_match(&summary, texts.iter().map(String::as_str)).expect("non-empty");
                frontier[k]
            }
            Selector::Hps { model, mode } => {
                let dist = goal_distribution(model, state, plan, frontier, game)?;
                dist.steps[select(&dist, rng, *mode)]
            }
        })
    }
}
