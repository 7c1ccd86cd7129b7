use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::{GoalCall, GoalVerb, Plan, FURNACE};
use crate::counts::ItemCounts;

fn quote(name: &str) -> String {
    if name.contains('\'') {
        format!("\"{name}\"")
    } else {
        format!("'{name}'")
    }
}

fn render_dict(counts: &ItemCounts) -> String {
    let body: Vec<String> = counts.iter().map(|(k, v)| format!("{}:{v}", quote(k))).collect();
    format!("{{{}}}", body.join(", "))
}

fn render_opt(name: &Option<String>) -> String {
    match name {
        Some(n) => quote(n),
        None => String::from("null"),
    }
}

/// The statement text, e.g. `mine({'log':3}, null);`.
pub fn render_call(call: &GoalCall) -> String {
    let outputs = render_dict(&call.outputs);
    match call.verb {
        GoalVerb::Craft | GoalVerb::Smelt => {
            let keyword = if call.verb == GoalVerb::Smelt && call.station.as_deref() != Some(FURNACE) {
                "smelt"
            } else {
                "craft"
            };
            format!("{keyword}({outputs}, {}, {});", render_dict(&call.inputs), render_opt(&call.station))
        }
        GoalVerb::Mine | GoalVerb::Kill => {
            format!("{}({outputs}, {});", call.verb.keyword(), render_opt(&call.tool))
        }
        GoalVerb::Equip => format!("equip({outputs}, null);"),
    }
}

fn list_counts(counts: &ItemCounts) -> String {
    let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{v} {k}")).collect();
    match parts.len() {
        0 => String::new(),
        1 => parts[0].clone(),
        n => format!("{} and {}", parts[..n - 1].join(", "), parts[n - 1]),
    }
}

/// Plain-words summary used for regenerated `# action k:` comments.
pub fn describe_call(call: &GoalCall) -> String {
    let outputs = list_counts(&call.outputs);
    match call.verb {
        GoalVerb::Mine | GoalVerb::Kill => match &call.tool {
            Some(t) => format!("{} {outputs} with {t}", call.verb.keyword()),
            None => format!("{} {outputs} without tool", call.verb.keyword()),
        },
        GoalVerb::Craft | GoalVerb::Smelt => {
            let keyword = if call.verb == GoalVerb::Smelt && call.station.as_deref() != Some(FURNACE) {
                "smelt"
            } else {
                "craft"
            };
            let mut s = format!("{keyword} {outputs} from {}", list_counts(&call.inputs));
            if let Some(st) = &call.station {
                let _ = write!(s, ", on {st}");
            }
            s
        }
        GoalVerb::Equip => format!("equip {}", call.primary().0),
    }
}

/// Canonical program text. Comments are regenerated from the calls.
pub fn render_plan(plan: &Plan) -> String {
    let mut out = format!("def {}(inventory = {{}}):\n", plan.name);
    for (i, call) in plan.steps.iter().enumerate() {
        let _ = writeln!(out, "    {} # action {}: {}", render_call(call), i + 1, describe_call(call));
    }
    let _ = writeln!(out, "    return {}", quote(&plan.return_item));
    out
}
