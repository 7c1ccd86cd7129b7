//! Feedback text sent back to the planner after a failure or on completion.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::craftworld::WorldState;
use crate::counts::ItemCounts;

/// What happened since the last description.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecTrace {
    /// 1-based step indices in completion order.
    pub succeeded_steps: Vec<usize>,
    /// 1-based index and rendered statement of the step that failed.
    pub failed_step: Option<(usize, String)>,
    pub round_id: usize,
    pub task_complete: bool,
    /// Every step ran but the target is still missing.
    pub plan_exhausted: bool,
}

pub const FINISHED_LINE: &str = "Good. I finish the task.";
pub const EXHAUSTED_LINE: &str = "I finish all steps of the plan, but the task is not complete.";

fn join_indices(ix: &[usize]) -> String {
    let parts: Vec<String> = ix.iter().map(|i| format!("{i}")).collect();
    parts.join(", ")
}

pub fn inventory_line(biome: &str, inventory: &ItemCounts) -> String {
    let items: Vec<String> = inventory.iter().filter(|(_, v)| *v > 0).map(|(k, v)| format!("{v} {k}")).collect();
    if items.is_empty() {
        format!("I locate in {biome} biome. My inventory now has nothing.")
    } else {
        format!("I locate in {biome} biome. My inventory now has {}.", items.join(", "))
    }
}

/// Description lines, in order: successes, location and inventory, then the
/// failure (or the completion line).
pub fn describe(state: &WorldState, trace: &ExecTrace) -> Vec<String> {
    let mut lines = Vec::new();
    if !trace.succeeded_steps.is_empty() {
        lines.push(format!("I succeed on step {}.", join_indices(&trace.succeeded_steps)));
    }
    if trace.task_complete {
        lines.push(String::from(FINISHED_LINE));
        return lines;
    }
    lines.push(inventory_line(&state.biome, state.inventory.counts()));
    if let Some((k, call)) = &trace.failed_step {
        lines.push(format!("I fail on step {k} \"{call}\"."));
    } else if trace.plan_exhausted {
        lines.push(String::from(EXHAUSTED_LINE));
    }
    lines
}
