use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Feedback, Planner, PlannerError};
use crate::agent::LoopMode;
use crate::craftworld::{Game, TaskSpec, WorldState};
use crate::explainer::{parse_explanation, Explanation};
use crate::plan_dsl::{extract_plan_text, parse_plan, Plan};

pub const PREAMBLE: &str =
    "You are a helper agent in Minecraft. You need to generate the sequences of goals (actions) for a certain task in Minecraft.";
pub const DEFAULT_TOKEN_CAP: usize = 8000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Agent,
    Planner,
    Descriptor,
    Explainer,
    Replanner,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Agent => "Agent",
            Role::Planner => "Planner",
            Role::Descriptor => "Descriptor",
            Role::Explainer => "Explainer",
            Role::Replanner => "Replanner",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        [Role::Agent, Role::Planner, Role::Descriptor, Role::Explainer, Role::Replanner]
            .into_iter()
            .find(|r| r.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: Role,
    pub text: String,
    /// 0 for the preamble and demonstrations, then one id per planning round.
    pub round: usize,
    /// Pinned turns survive truncation.
    pub pinned: bool,
}

const DEMO_STONE_SWORD: &str = r#"Agent: How to craft stone_sword?
Planner: The code for crafting stone_sword is as bellows:
def craft_stone_sword(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    mine({'cobblestone':2}, null); # action 4: mine 2 cobblestone without tool
    craft({'stone_sword':1}, {'cobblestone':2, 'stick':1}, 'crafting_table'); # action 5: craft 1 stone_sword from 2 cobblestone and 1 stick, on crafting_table
    return 'stone_sword'
Descriptor: I succeed on step 1, 2, 3.
Descriptor: I locate in plains biome. My inventory now has 10 planks, 4 stick.
Descriptor: I fail on step 4 "mine({'cobblestone':2}, null);".
Explainer: Because mine cobblestone need to use the tool wooden_pickaxe.
Replanner: Please fix above errors and replan the task "How to craft 1 stone_sword".
Planner: The code for crafting stone_sword is as bellows:
def craft_stone_sword(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table'); # action 4: craft 1 wooden_pickaxe from 3 planks and 2 stick, on crafting_table
    mine({'cobblestone':2}, 'wooden_pickaxe'); # action 5: mine 2 cobblestone with wooden_pickaxe
    craft({'stone_sword':1}, {'cobblestone':2, 'stick':1}, 'crafting_table'); # action 6: craft 1 stone_sword from 2 cobblestone and 1 stick, on crafting_table
    return 'stone_sword'
Descriptor: I locate in plains biome. My inventory now has 10 planks, 4 stick.
Descriptor: I fail on step 4 "craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table');".
Explainer: because the action needs to use the tool crafting_table, but I do not have it.
Replanner: Please fix above errors and replan the task "How to craft 1 stone_sword".
Planner: The code for crafting stone_sword is as bellows:
def craft_1_stone_sword(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    craft({'crafting_table':1}, {'planks':4}, null); # action 4: craft 1 crafting_table from 4 planks
    craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table'); # action 5: craft 1 wooden_pickaxe from 3 planks and 2 stick, on crafting_table
    mine({'cobblestone':2}, 'wooden_pickaxe'); # action 6: mine 2 cobblestone with wooden_pickaxe
    craft({'stone_sword':1}, {'cobblestone':2, 'stick':1}, 'crafting_table'); # action 7: craft 1 stone_sword from 2 cobblestone and 1 stick, on crafting_table
    return 'stone_sword'
Descriptor: I succeed on step 4, 5, 6, 7.
Descriptor: Good. I finish the task.
Planner: OK."#;

const DEMO_FURNACE: &str = r#"Agent: How to craft 1 furnace?
Planner: The code for crafting furnace is as bellows:
def craft_1_furnace(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    craft({'crafting_table':1}, {'planks':4}, null); # action 4: craft 1 crafting_table from 4 planks
    craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table'); # action 5: craft 1 wooden_pickaxe from 3 planks and 2 stick, on crafting_table
    mine({'cobblestone':6}, 'wooden_pickaxe'); # action 6: mine 6 cobblestone with wooden_pickaxe
    craft({'furnace':1}, {'cobblestone':8}, 'crafting_table'); # action 7: craft 1 furnace from 8 cobblestone, on crafting_table
    return 'furnace'
Descriptor: I succeed on step 1, 2, 3, 4, 5, 6.
Descriptor: I locate in plains biome. My inventory now has 3 planks, 2 stick, 1 crafting_table, 1 wooden_pickaxe, 6 cobblestone.
Descriptor: I fail on step 7 "craft({'furnace':1}, {'cobblestone':8}, 'crafting_table');".
Explainer: because the action needs 8 cobblestone, but I only have 6 cobblestone.
Replanner: Please fix above errors and replan the task "How to craft 1 furnace".
Planner: The code for crafting furnace is as bellows:
def craft_1_furnace(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    craft({'crafting_table':1}, {'planks':4}, null); # action 4: craft 1 crafting_table from 4 planks
    craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table'); # action 5: craft 1 wooden_pickaxe from 3 planks and 2 stick, on crafting_table
    mine({'cobblestone':6}, 'wooden_pickaxe'); # action 6: mine 6 cobblestone with wooden_pickaxe
    mine({'cobblestone':2}, 'wooden_pickaxe'); # action 7: mine 2 cobblestone with wooden_pickaxe
    craft({'furnace':1}, {'cobblestone':8}, 'crafting_table'); # action 8: craft 1 furnace from 8 cobblestone, on crafting_table
    return 'furnace'
Descriptor: I succeed on step 7, 8.
Descriptor: Good. I finish the task.
Planner: OK."#;

/// The demonstration transcripts as raw text.
pub fn demonstrations_text() -> [&'static str; 2] {
    [DEMO_STONE_SWORD, DEMO_FURNACE]
}

/// The two worked examples that open every transcript, as role/text pairs.
/// Multi-line planner replies are folded back into one turn.
pub fn demonstrations() -> Vec<Vec<(Role, String)>> {
    [DEMO_STONE_SWORD, DEMO_FURNACE].iter().map(|d| split_turns(d)).collect()
}

/// Splits "Role: text" lines into turns; lines without a role prefix continue
/// the previous turn.
pub fn split_turns(text: &str) -> Vec<(Role, String)> {
    let mut out: Vec<(Role, String)> = Vec::new();
    for line in text.lines() {
        let tagged = line.split_once(": ").and_then(|(head, rest)| Role::from_name(head).map(|r| (r, rest)));
        match (tagged, out.last_mut()) {
            (Some((role, rest)), _) => out.push((role, rest.trim_end().to_string())),
            (None, Some((_, prev))) => {
                prev.push('\n');
                prev.push_str(line.trim_end());
            }
            (None, None) => {}
        }
    }
    out
}

fn words(text: &str) -> usize {
    text.split_whitespace().count()
}

/// The running prompt. New turns are appended; when the estimate passes the
/// cap the oldest unpinned rounds go first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTranscript {
    pub turns: Vec<Turn>,
    pub token_estimate: usize,
    pub demonstrations: usize,
    pub cap: usize,
    words: usize,
}

impl PromptTranscript {
    pub fn new(cap: usize) -> Self {
        let mut t = Self {
            turns: Vec::new(),
            token_estimate: 0,
            demonstrations: 0,
            cap,
            words: 0,
        };
        t.push_pinned(Role::Agent, PREAMBLE, 0);
        t.push_pinned(Role::Planner, "OK.", 0);
        for demo in demonstrations() {
            for (role, text) in demo {
                t.push_pinned(role, &text, 0);
            }
            t.demonstrations += 1;
        }
        t
    }

    /// Whitespace words times 1.3, rounded up.
    pub fn estimate(words: usize) -> usize {
        (words * 13).div_ceil(10)
    }

    fn recompute(&mut self) {
        self.words = self.turns.iter().map(|t| words(&t.text)).sum();
        self.token_estimate = Self::estimate(self.words);
    }

    fn push_pinned(&mut self, role: Role, text: &str, round: usize) {
        self.turns.push(Turn {
            role,
            text: text.to_string(),
            round,
            pinned: true,
        });
        self.recompute();
    }

    /// Pins the task question so truncation never removes it.
    pub fn push_task(&mut self, text: &str, round: usize) {
        self.push_pinned(Role::Agent, text, round);
        self.truncate(round);
    }

    pub fn push(&mut self, role: Role, text: &str, round: usize) {
        self.turns.push(Turn {
            role,
            text: text.to_string(),
            round,
            pinned: false,
        });
        self.recompute();
        self.truncate(round);
    }

    /// Drops whole rounds, oldest first, until under the cap. The current
    /// round is kept even if that leaves the estimate above the cap.
    pub fn truncate(&mut self, current_round: usize) {
        while self.token_estimate > self.cap {
            let oldest = self
                .turns
                .iter()
                .filter(|t| !t.pinned && t.round != current_round)
                .map(|t| t.round)
                .min();
            let Some(r) = oldest else { break };
            self.turns.retain(|t| t.pinned || t.round != r);
            self.recompute();
        }
    }

    /// Chat messages: planner and explainer turns speak as the assistant,
    /// everything else as the user. Adjacent same-role turns are merged.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out: Vec<ChatMessage> = Vec::new();
        for t in &self.turns {
            let role = match t.role {
                Role::Planner | Role::Explainer => "assistant",
                _ => "user",
            };
            let line = format!("{}: {}", t.role.name(), t.text);
            match out.last_mut() {
                Some(m) if m.role == role => {
                    m.content.push('\n');
                    m.content.push_str(&line);
                }
                _ => out.push(ChatMessage {
                    role: role.to_string(),
                    content: line,
                }),
            }
        }
        out
    }

    /// One "Role: text" line per turn.
    pub fn render(&self) -> String {
        let lines: Vec<String> = self.turns.iter().map(|t| format!("{}: {}", t.role.name(), t.text)).collect();
        lines.join("\n")
    }

    /// Turns from interactive rounds, demonstrations excluded.
    pub fn live_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.round > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EndpointError {
    #[error("endpoint unreachable: {0}")]
    Unavailable(String),
    #[error("malformed endpoint response: {0}")]
    BadResponse(String),
    #[error("no more canned replies")]
    Exhausted,
}

pub trait ChatEndpoint {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, EndpointError>;
}

impl<E: ChatEndpoint + ?Sized> ChatEndpoint for Box<E> {
    fn complete(&mut self, messages: &[ChatMessage]) -> Result<String, EndpointError> {
        (**self).complete(messages)
    }
}

/// Returns canned replies in order.
#[derive(Debug, Clone, Default)]
pub struct ReplayEndpoint {
    pub replies: Vec<String>,
    pub calls: usize,
}

impl ReplayEndpoint {
    pub fn new(replies: Vec<String>) -> Self {
        Self { replies, calls: 0 }
    }
}

impl ChatEndpoint for ReplayEndpoint {
    fn complete(&mut self, _messages: &[ChatMessage]) -> Result<String, EndpointError> {
        let reply = self.replies.get(self.calls).cloned().ok_or(EndpointError::Exhausted)?;
        self.calls += 1;
        Ok(reply)
    }
}

/// Planner backed by a chat model.
pub struct LlmPlanner<E> {
    pub endpoint: E,
    pub transcript: PromptTranscript,
    /// Ask the model for explanations instead of using the rule-based explainer.
    pub model_explains: bool,
    round: usize,
    described: Option<usize>,
    explained: Option<usize>,
    question: String,
}

impl<E: ChatEndpoint> LlmPlanner<E> {
    pub fn new(endpoint: E, cap: usize) -> Self {
        Self {
            endpoint,
            transcript: PromptTranscript::new(cap),
            model_explains: false,
            round: 0,
            described: None,
            explained: None,
            question: String::new(),
        }
    }

    fn ask(&mut self, role: Role) -> Result<String, PlannerError> {
        let reply = self.endpoint.complete(&self.transcript.messages())?;
        let reply = reply.trim().to_string();
        let reply = reply.strip_prefix("Planner:").map(|r| r.trim_start().to_string()).unwrap_or(reply);
        let reply = reply.strip_prefix("Explainer:").map(|r| r.trim_start().to_string()).unwrap_or(reply);
        self.transcript.push(role, &reply, self.round);
        Ok(reply)
    }

    fn ask_plan(&mut self) -> Result<Plan, PlannerError> {
        let reply = self.ask(Role::Planner)?;
        let Some(code) = extract_plan_text(&reply) else {
            return Err(PlannerError::PlanParseFailure {
                reason: String::from("reply has no code block or def ... return span"),
                error: None,
            });
        };
        parse_plan(&code).map_err(|e| PlannerError::PlanParseFailure {
            reason: e.to_string(),
            error: Some(e),
        })
    }

    fn describe(&mut self, fb: &Feedback<'_>) {
        if self.described == Some(fb.round) {
            return;
        }
        for line in fb.description {
            self.transcript.push(Role::Descriptor, line, self.round);
        }
        self.described = Some(fb.round);
    }
}

impl<E: ChatEndpoint> Planner for LlmPlanner<E> {
    fn initial_plan(&mut self, task: &TaskSpec, _state: &WorldState, game: &Game) -> Result<Plan, PlannerError> {
        self.round += 1;
        self.question = task.question(&game.recipes);
        let q = format!("{}?", self.question);
        self.transcript.push_task(&q, self.round);
        self.ask_plan()
    }

    fn explain(
        &mut self,
        _task: &TaskSpec,
        state: &WorldState,
        _game: &Game,
        fb: &Feedback<'_>,
    ) -> Option<Result<Explanation, PlannerError>> {
        if !self.model_explains || fb.mode != LoopMode::Deps {
            return None;
        }
        let step = fb.failed_step?;
        self.round += 1;
        self.describe(fb);
        self.explained = Some(fb.round);
        Some(self.ask(Role::Explainer).map(|text| Explanation {
            kind: parse_explanation(&text, Some(&state.inventory)),
            step_index: step,
            rendered: text,
        }))
    }

    fn replan(&mut self, _task: &TaskSpec, _state: &WorldState, _game: &Game, fb: &Feedback<'_>) -> Result<Plan, PlannerError> {
        if self.described != Some(fb.round) {
            self.round += 1;
        }
        self.describe(fb);
        if self.explained != Some(fb.round) && fb.mode == LoopMode::Deps {
            if let Some(e) = fb.explanation {
                self.transcript.push(Role::Explainer, &e.rendered, self.round);
            }
        }
        let text = format!("Please fix above errors and replan the task \"{}\".", self.question);
        self.transcript.push(Role::Replanner, &text, self.round);
        self.ask_plan()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn starts_with_preamble_and_two_demos() {
        let t = PromptTranscript::new(DEFAULT_TOKEN_CAP);
        assert_eq!(t.demonstrations, 2);
        assert_eq!(t.turns[0].text, PREAMBLE);
        assert_eq!(t.turns[1].text, "OK.");
        assert!(t.turns.iter().all(|t| t.pinned && t.round == 0));
        assert_eq!(t.token_estimate, PromptTranscript::estimate(t.words));
    }

    #[test]
    fn demo_replies_fold_into_single_turns() {
        let demos = demonstrations();
        let first = &demos[0];
        assert_eq!(first[0], (Role::Agent, String::from("How to craft stone_sword?")));
        assert_eq!(first[1].0, Role::Planner);
        assert!(first[1].1.contains("return 'stone_sword'"));
        assert_eq!(first.iter().filter(|(r, _)| *r == Role::Replanner).count(), 2);
    }

    #[test]
    fn evicts_oldest_round_first() {
        let base = PromptTranscript::new(usize::MAX).token_estimate;
        let mut t = PromptTranscript::new(base + 40);
        t.push_task("How to mine 1 diamond?", 1);
        let filler = "word ".repeat(10);
        t.push(Role::Descriptor, &filler, 2);
        t.push(Role::Descriptor, &filler, 3);
        assert!(t.turns.iter().any(|x| x.round == 2));
        t.push(Role::Descriptor, &filler, 4);
        assert!(!t.turns.iter().any(|x| x.round == 2));
        assert!(t.turns.iter().any(|x| x.round == 4));
        assert_eq!(t.demonstrations, 2);
        assert!(t.turns.iter().any(|x| x.text == "How to mine 1 diamond?"));
        assert!(t.token_estimate <= t.cap);
    }

    #[test]
    fn replay_runs_dry() {
        let mut e = ReplayEndpoint::new(alloc::vec![String::from("a")]);
        assert_eq!(e.complete(&[]).unwrap(), "a");
        assert_eq!(e.complete(&[]), Err(EndpointError::Exhausted));
    }
}
