//! The pythonic goal language planners emit and agents execute.
//!
//! ```text
//! def craft_stone_sword(inventory = {}):
//!     mine({'log':3}, null); # action 1: mine 3 log without tool
//!     craft({'planks':12}, {'log':3}, null);
//!     return 'stone_sword'
//! ```

mod graph;
mod mapping;
mod parse;
mod render;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::counts::ItemCounts;

pub use graph::{build_goal_graph, GoalGraph, GraphError};
pub use mapping::{map_free_goal, MappedGoal, UnknownGoal, SIMILARITY_THRESHOLD};
pub use parse::{extract_plan_text, parse_goal_call, parse_plan, ParseError, ParseErrorKind};
pub use render::{describe_call, render_call, render_plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalVerb {
    Mine,
    Craft,
    Smelt,
    Kill,
    Equip,
}

impl GoalVerb {
    pub fn keyword(self) -> &'static str {
        match self {
            GoalVerb::Mine => "mine",
            GoalVerb::Craft => "craft",
            GoalVerb::Smelt => "smelt",
            GoalVerb::Kill => "kill",
            GoalVerb::Equip => "equip",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "mine" => GoalVerb::Mine,
            "craft" => GoalVerb::Craft,
            "smelt" => GoalVerb::Smelt,
            "kill" => GoalVerb::Kill,
            "equip" => GoalVerb::Equip,
            _ => return None,
        })
    }

    /// Verbs whose second argument is a tool rather than an input dict.
    pub fn gathers(self) -> bool {
        matches!(self, GoalVerb::Mine | GoalVerb::Kill)
    }

    pub fn crafts(self) -> bool {
        matches!(self, GoalVerb::Craft | GoalVerb::Smelt)
    }
}

impl fmt::Display for GoalVerb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

pub const FURNACE: &str = "furnace";

/// One statement of a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GoalCall {
    pub verb: GoalVerb,
    pub outputs: ItemCounts,
    #[serde(default)]
    pub inputs: ItemCounts,
    #[serde(default)]
    pub tool: Option<String>,
    #[serde(default)]
    pub station: Option<String>,
    /// Trailing comment text, kept as written. Ignored by equality.
    #[serde(default)]
    pub comment: String,
}

impl PartialEq for GoalCall {
    fn eq(&self, other: &Self) -> bool {
        self.verb == other.verb
            && self.outputs == other.outputs
            && self.inputs == other.inputs
            && self.tool == other.tool
            && self.station == other.station
    }
}

impl Eq for GoalCall {}

impl GoalCall {
    pub fn mine(item: &str, count: u32, tool: Option<&str>) -> Self {
        Self {
            verb: GoalVerb::Mine,
            outputs: ItemCounts::single(item, count),
            inputs: ItemCounts::new(),
            tool: tool.map(String::from),
            station: None,
            comment: String::new(),
        }
    }

    pub fn kill(item: &str, count: u32, tool: Option<&str>) -> Self {
        Self {
            verb: GoalVerb::Kill,
            ..Self::mine(item, count, tool)
        }
    }

    /// A craft call; a furnace station makes it a smelt.
    pub fn craft(outputs: ItemCounts, inputs: ItemCounts, station: Option<&str>) -> Self {
        let verb = if station == Some(FURNACE) {
            GoalVerb::Smelt
        } else {
            GoalVerb::Craft
        };
        Self {
            verb,
            outputs,
            inputs,
            tool: None,
            station: station.map(String::from),
            comment: String::new(),
        }
    }

    pub fn equip(item: &str) -> Self {
        Self {
            verb: GoalVerb::Equip,
            outputs: ItemCounts::single(item, 1),
            inputs: ItemCounts::new(),
            tool: None,
            station: None,
            comment: String::new(),
        }
    }

    /// The first output item and its count.
    pub fn primary(&self) -> (&str, u32) {
        self.outputs.first().unwrap_or(("", 0))
    }

    /// Stable identifier used by selectors and horizon models, e.g. `mine:log`.
    pub fn goal_id(&self) -> String {
        let mut id = String::from(self.verb.keyword());
        id.push(':');
        id.push_str(self.primary().0);
        id
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub name: String,
    /// Step `k` (1-based) lives at `steps[k - 1]`.
    pub steps: Vec<GoalCall>,
    pub return_item: String,
}

impl PartialEq for Plan {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.steps == other.steps && self.return_item == other.return_item
    }
}

impl Eq for Plan {}

impl Plan {
    pub fn new(name: impl Into<String>, return_item: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            steps: Vec::new(),
            return_item: return_item.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// 1-based step lookup.
    pub fn step(&self, index: usize) -> Option<&GoalCall> {
        index.checked_sub(1).and_then(|i| self.steps.get(i))
    }

    /// Distinct output items in order of first production.
    pub fn milestones(&self) -> Vec<String> {
        let mut seen: Vec<String> = Vec::new();
        for step in &self.steps {
            for item in step.outputs.keys() {
                if !seen.iter().any(|s| s == item) {
                    seen.push(String::from(item));
                }
            }
        }
        seen
    }
}
