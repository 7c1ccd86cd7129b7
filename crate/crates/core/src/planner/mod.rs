//! Plan producers: an exact backward chainer, a fault-injecting wrapper that
//! makes the mistakes chat models tend to make, and a chat-endpoint planner.

mod faulty;
mod llm;
mod oracle;

use alloc::string::String;

use crate::agent::LoopMode;
use crate::craftworld::{Game, TaskSpec, WorldState};
use crate::explainer::Explanation;
use crate::plan_dsl::{ParseError, Plan};

pub use faulty::{faulty_plan, FaultConfig, FaultyPlanner};
pub use llm::{
    demonstrations, demonstrations_text, split_turns, ChatEndpoint, ChatMessage, EndpointError, LlmPlanner, PromptTranscript, ReplayEndpoint, Role, Turn,
    DEFAULT_TOKEN_CAP, PREAMBLE,
};
pub use oracle::{oracle_plan, oracle_steps, OraclePlanner};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlannerError {
    #[error("no recipe or mine rule produces '{item}'")]
    Unreachable { item: String },
    #[error("chat endpoint failed: {0}")]
    Endpoint(#[from] EndpointError),
    #[error("reply did not contain a parseable plan: {reason}")]
    PlanParseFailure { reason: String, error: Option<ParseError> },
}

/// What the agent reports back when asking for a revised plan.
#[derive(Debug, Clone, Copy)]
pub struct Feedback<'a> {
    pub plan: &'a Plan,
    pub description: &'a [String],
    pub explanation: Option<&'a Explanation>,
    /// 1-based index of the failed step; `None` when the plan ran out.
    pub failed_step: Option<usize>,
    /// 1-based index of the first unfinished step. Steps before it are kept
    /// as done in the revised plan.
    pub resume_index: usize,
    pub completed: &'a [bool],
    pub mode: LoopMode,
    pub round: usize,
}

pub trait Planner {
    fn initial_plan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game) -> Result<Plan, PlannerError>;

    /// A planner-side explanation of the failure, if this planner produces one.
    /// `None` means the agent uses the rule-based explainer.
    fn explain(
        &mut self,
        _task: &TaskSpec,
        _state: &WorldState,
        _game: &Game,
        _feedback: &Feedback<'_>,
    ) -> Option<Result<Explanation, PlannerError>> {
        None
    }

    fn replan(&mut self, task: &TaskSpec, state: &WorldState, game: &Game, feedback: &Feedback<'_>) -> Result<Plan, PlannerError>;
}
