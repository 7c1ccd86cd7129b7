//! Replays the recorded diamond episode against the simulator and checks the
//! feedback text line for line.

mod common;

use craftplan_core::agent::{run_episode, AgentConfig, Event, Pickup, ScriptedExecutor, WorldExecutor};
use craftplan_core::craftworld::{CostModel, TaskSpec, WorldConfig};
use craftplan_core::planner::{LlmPlanner, ReplayEndpoint, DEFAULT_TOKEN_CAP};
use craftplan_core::plan_dsl::{build_goal_graph, parse_plan, extract_plan_text};
use craftplan_core::selector::Selector;
use serde::Deserialize;

#[derive(Deserialize)]
struct Golden {
    task: TaskSpec,
    replies: Vec<String>,
    pickups: Vec<Pickup>,
    expected_descriptor: Vec<Vec<String>>,
    expected_explainer: Vec<String>,
}

fn golden() -> Golden {
    serde_json::from_str(include_str!("../fixtures/golden_diamond.json")).unwrap()
}

fn replay() -> (Golden, Vec<Event>, craftplan_core::agent::EpisodeResult) {
    let g = golden();
    let game = common::game_with(WorldConfig {
        success_override: Some(1.0),
        cost: CostModel::Fixed { fraction: 0.0 },
        ..WorldConfig::default()
    });
    let mut planner = LlmPlanner::new(ReplayEndpoint::new(g.replies.clone()), DEFAULT_TOKEN_CAP);
    let mut exec = ScriptedExecutor {
        inner: WorldExecutor,
        pickups: g.pickups.clone(),
    };
    let mut events = Vec::new();
    let res = run_episode(&g.task, 7, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut exec, &mut events);
    (g, events, res)
}

#[test]
fn descriptor_and_explainer_lines_match() {
    let (g, events, res) = replay();
    assert!(res.success, "{res:?}");
    assert_eq!(res.rounds_used, 7);
    let describes: Vec<Vec<String>> = events
        .iter()
        .filter_map(|e| match e {
            Event::Describe { lines, .. } => Some(lines.clone()),
            _ => None,
        })
        .collect();
    let explains: Vec<String> = events
        .iter()
        .filter_map(|e| match e {
            Event::Explain { text, .. } => Some(text.clone()),
            _ => None,
        })
        .collect();
    assert_eq!(describes, g.expected_descriptor);
    assert_eq!(explains, g.expected_explainer);
}

#[test]
fn final_plan_reaches_all_milestones_in_dependency_order() {
    let g = golden();
    let game = common::game();
    let last = parse_plan(&extract_plan_text(g.replies.last().unwrap()).unwrap()).unwrap();
    let mut got = last.milestones();
    got.sort();
    let mut want = g.task.milestones.clone();
    want.sort();
    assert_eq!(got, want);

    // The milestone list must be a valid visiting order of the final plan.
    let graph = build_goal_graph(&last, &game.recipes, &g.task.alternatives).unwrap();
    let first_step = |item: &str| last.steps.iter().position(|s| s.primary().0 == item).unwrap();
    let order: Vec<usize> = g.task.milestones.iter().map(|m| first_step(m)).collect();
    for (a, b) in &graph.edges {
        let pa = order.iter().position(|o| o == a);
        let pb = order.iter().position(|o| o == b);
        if let (Some(pa), Some(pb)) = (pa, pb) {
            assert!(pa < pb, "edge {a}->{b} violated by milestone order");
        }
    }
}

#[test]
fn replies_are_the_eight_recorded_plans() {
    let g = golden();
    let lens: Vec<usize> = g
        .replies
        .iter()
        .map(|r| parse_plan(&extract_plan_text(r).unwrap()).unwrap().len())
        .collect();
    assert_eq!(lens, vec![8, 9, 12, 13, 14, 14, 16, 17]);
}
