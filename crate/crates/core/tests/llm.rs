mod common;

use craftplan_core::agent::{run_episode, AgentConfig, Event, LoopMode, NullSink, WorldExecutor};
use craftplan_core::craftworld::{CostModel, WorldConfig};
use craftplan_core::planner::{
    demonstrations, ChatEndpoint, ChatMessage, EndpointError, LlmPlanner, ReplayEndpoint, Role, DEFAULT_TOKEN_CAP,
};
use craftplan_core::agent::FailureCause;
use craftplan_core::selector::Selector;

/// Replays canned replies and keeps every prompt it was sent.
struct Recording {
    inner: ReplayEndpoint,
    prompts: Vec<Vec<ChatMessage>>,
}

impl ChatEndpoint for Recording {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, EndpointError> {
        self.prompts.push(messages.to_vec());
        self.inner.complete(messages)
    }
}

fn demo_replies(index: usize) -> (Vec<String>, Vec<String>) {
    let demo = &demonstrations()[index];
    let replies = demo.iter().filter(|(r, t)| *r == Role::Planner && t.contains("def ")).map(|(_, t)| t.clone()).collect();
    let said = demo
        .iter()
        .filter(|(r, _)| matches!(r, Role::Descriptor | Role::Explainer))
        .map(|(_, t)| t.clone())
        .collect();
    (replies, said)
}

/// Feeding a demonstration's own plans back reproduces its feedback lines.
fn replay_demo(index: usize, task_id: &str) {
    let game = common::game_with(WorldConfig {
        success_override: Some(1.0),
        cost: CostModel::Fixed { fraction: 0.0 },
        ..WorldConfig::default()
    });
    let mut task = common::task(task_id);
    task.biome = Some("plains".into());
    let (replies, want) = demo_replies(index);
    let mut planner = LlmPlanner::new(ReplayEndpoint::new(replies), DEFAULT_TOKEN_CAP);
    let mut events = Vec::new();
    let res = run_episode(&task, 1, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut events);
    assert!(res.success, "{:?}", res.failure_cause);
    let got: Vec<String> = events
        .iter()
        .flat_map(|e| match e {
            Event::Describe { lines, .. } => lines.clone(),
            Event::Explain { text, .. } => vec![text.clone()],
            _ => vec![],
        })
        .collect();
    assert_eq!(got, want);
}

#[test]
fn stone_sword_demo_replays() {
    replay_demo(0, "CraftStoneSword");
}

#[test]
fn furnace_demo_replays() {
    replay_demo(1, "CraftFurnace");
}

#[test]
fn prompts_carry_feedback_and_the_replan_request() {
    let game = common::game_with(WorldConfig {
        success_override: Some(1.0),
        ..WorldConfig::default()
    });
    let task = common::task("CraftStoneSword");
    let (replies, _) = demo_replies(0);
    let mut planner = LlmPlanner::new(
        Recording {
            inner: ReplayEndpoint::new(replies),
            prompts: Vec::new(),
        },
        DEFAULT_TOKEN_CAP,
    );
    run_episode(&task, 1, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut NullSink);
    let prompts = &planner.endpoint.prompts;
    assert_eq!(prompts.len(), 3);
    let first = &prompts[0];
    assert!(first[0].content.starts_with("Agent: You are a helper agent in Minecraft."));
    assert!(first.last().unwrap().content.ends_with("Agent: How to craft 1 stone_sword?"));
    // Descriptor (user), Explainer (assistant), Replanner (user).
    let tail = &prompts[1][prompts[1].len() - 3..];
    assert_eq!(tail.iter().map(|m| m.role.as_str()).collect::<Vec<_>>(), ["user", "assistant", "user"]);
    assert!(tail[0].content.ends_with("Descriptor: I fail on step 4 \"mine({'cobblestone':2}, null);\"."));
    assert_eq!(tail[1].content, "Explainer: Because mine cobblestone need to use the tool wooden_pickaxe.");
    assert_eq!(tail[2].content, "Replanner: Please fix above errors and replan the task \"How to craft 1 stone_sword\".");
    // Roles alternate after merging.
    for p in prompts {
        assert!(p.windows(2).all(|w| w[0].role != w[1].role));
    }
}

#[test]
fn feedback_only_sends_no_explanation() {
    let game = common::game_with(WorldConfig {
        success_override: Some(1.0),
        ..WorldConfig::default()
    });
    let task = common::task("CraftStoneSword");
    let (replies, _) = demo_replies(0);
    let mut planner = LlmPlanner::new(
        Recording {
            inner: ReplayEndpoint::new(replies),
            prompts: Vec::new(),
        },
        DEFAULT_TOKEN_CAP,
    );
    let cfg = AgentConfig {
        mode: LoopMode::FeedbackOnly,
        ..AgentConfig::default()
    };
    let res = run_episode(&task, 1, &game, &mut planner, &Selector::Fixed, &cfg, &mut WorldExecutor, &mut NullSink);
    assert!(res.success);
    let live: Vec<_> = planner.transcript.live_turns().collect();
    assert!(live.iter().all(|t| t.role != Role::Explainer));
}

#[test]
fn model_explanations_are_read_back() {
    let game = common::game_with(WorldConfig {
        success_override: Some(1.0),
        ..WorldConfig::default()
    });
    let task = common::task("CraftStoneSword");
    let (mut replies, _) = demo_replies(0);
    replies.insert(1, "Explainer: because mine cobblestone need to use the tool wooden_pickaxe.".into());
    replies.insert(3, "because the action needs to use the tool crafting_table, but I do not have it.".into());
    let mut planner = LlmPlanner::new(ReplayEndpoint::new(replies), DEFAULT_TOKEN_CAP);
    planner.model_explains = true;
    let mut events = Vec::new();
    let res = run_episode(&task, 1, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut events);
    assert!(res.success);
    let explains: Vec<&str> = events
        .iter()
        .filter_map(|e| match e {
            Event::Explain { text, .. } => Some(text.as_str()),
            _ => None,
        })
        .collect();
    assert_eq!(explains[0], "because mine cobblestone need to use the tool wooden_pickaxe.");
}

#[test]
fn garbage_reply_costs_a_round_and_a_dead_endpoint_ends_the_episode() {
    let game = common::game();
    let task = common::task("CraftStoneSword");
    let mut planner = LlmPlanner::new(ReplayEndpoint::new(vec!["I cannot help with that.".into()]), DEFAULT_TOKEN_CAP);
    let mut events = Vec::new();
    let res = run_episode(&task, 1, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut events);
    assert!(!res.success);
    assert!(matches!(events[0], Event::PlanError { .. }));
    assert!(matches!(res.failure_cause, Some(FailureCause::Planner { .. })));
    assert_eq!(res.rounds_used, 1);
}

#[test]
fn long_runs_stay_under_the_token_cap() {
    let game = common::game();
    let task = common::task("MineDiamond");
    let base = craftplan_core::planner::PromptTranscript::new(usize::MAX).token_estimate;
    let cap = base + 600;
    let golden: serde_json::Value = serde_json::from_str(include_str!("../fixtures/golden_diamond.json")).unwrap();
    let replies: Vec<String> = golden["replies"].as_array().unwrap().iter().map(|r| r.as_str().unwrap().to_string()).collect();
    let mut planner = LlmPlanner::new(ReplayEndpoint::new(replies), cap);
    run_episode(&task, 2, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut NullSink);
    let t = &planner.transcript;
    assert_eq!(t.demonstrations, 2);
    assert!(t.turns.iter().any(|x| x.text == "How to mine 1 diamond?"));
    let last = t.turns.iter().map(|x| x.round).max().unwrap();
    // Anything over the cap is the current round alone.
    if t.token_estimate > t.cap {
        assert!(t.turns.iter().all(|x| x.pinned || x.round == last));
    }
    assert!(t.turns.iter().filter(|x| !x.pinned).all(|x| x.round + 3 >= last), "old rounds kept");
}
