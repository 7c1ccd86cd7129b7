//! Planning core for a symbolic crafting world: a small plan language, a
//! seeded simulator, and the describe/explain/plan/select loop that drives it.
#![no_std]

extern crate alloc;

pub mod agent;
pub mod counts;
pub mod craftworld;
pub mod descriptor;
pub mod explainer;
pub mod plan_dsl;
pub mod planner;
pub mod seeds;
pub mod selector;
pub mod similarity;
pub mod stats;
