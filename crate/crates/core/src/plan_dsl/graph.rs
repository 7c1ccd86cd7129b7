use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Plan;
use crate::craftworld::RecipeDb;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("step {step} references unknown item '{item}'")]
    UnknownItem { step: usize, item: String },
    #[error("plan precedence contains a cycle")]
    CyclicPlan,
}

/// Precedence structure over plan steps. Nodes are 0-based step positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalGraph {
    pub parents: Vec<Vec<usize>>,
    pub edges: Vec<(usize, usize)>,
    pub and_groups: Vec<Vec<usize>>,
    pub or_groups: Vec<Vec<usize>>,
}

impl GoalGraph {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn or_group_of(&self, node: usize) -> Option<&[usize]> {
        self.or_groups.iter().find(|g| g.contains(&node)).map(|g| g.as_slice())
    }

    pub fn is_acyclic(&self) -> bool {
        let n = self.len();
        let mut indeg = alloc::vec![0usize; n];
        let mut children = alloc::vec![Vec::new(); n];
        for &(a, b) in &self.edges {
            indeg[b] += 1;
            children[a].push(b);
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(v) = queue.pop() {
            seen += 1;
            for &c in &children[v] {
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push(c);
                }
            }
        }
        seen == n
    }

    /// Incomplete nodes whose parents are all complete; an OR group counts as
    /// complete once any member is.
    pub fn ready(&self, complete: &[bool]) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !complete[i] && self.parents[i].iter().all(|&p| self.satisfied(p, complete)))
            .collect()
    }

    fn satisfied(&self, node: usize, complete: &[bool]) -> bool {
        complete[node]
            || self
                .or_group_of(node)
                .map(|g| g.iter().any(|&m| complete[m]))
                .unwrap_or(false)
    }
}

/// Builds precedence edges, AND groups and OR groups for `plan`.
///
/// A consumer depends on the nearest earlier producers of each item it needs,
/// walking backwards until the needed quantity is covered. Tools and stations
/// count as a need of one. `alternatives` maps an abstract requirement to
/// interchangeable concrete items (`wood` → `oak_wood`, `birch_wood`).
pub fn build_goal_graph(
    plan: &Plan,
    recipes: &RecipeDb,
    alternatives: &BTreeMap<String, Vec<String>>,
) -> Result<GoalGraph, GraphError> {
    let known = |item: &str| recipes.knows(item) || alternatives.contains_key(item);
    for (i, step) in plan.steps.iter().enumerate() {
        let mut names: Vec<&str> = step.outputs.keys().chain(step.inputs.keys()).collect();
        names.extend(step.tool.as_deref());
        names.extend(step.station.as_deref());
        if let Some(bad) = names.into_iter().find(|n| !known(n)) {
            return Err(GraphError::UnknownItem {
                step: i + 1,
                item: String::from(bad),
            });
        }
    }

    let n = plan.steps.len();
    let matches = |need: &str, produced: &str| {
        need == produced
            || alternatives
                .get(need)
                .map(|alts| alts.iter().any(|a| a == produced))
                .unwrap_or(false)
    };

    let mut parents: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); n];
    for (j, consumer) in plan.steps.iter().enumerate() {
        let mut needs: Vec<(&str, u64)> = consumer.inputs.iter().map(|(k, v)| (k, u64::from(v))).collect();
        needs.extend(consumer.tool.as_deref().map(|t| (t, 1)));
        needs.extend(consumer.station.as_deref().map(|s| (s, 1)));
        for (item, qty) in needs {
            let mut covered = 0u64;
            for i in (0..j).rev() {
                let supplied: u64 = plan.steps[i]
                    .outputs
                    .iter()
                    .filter(|(k, _)| matches(item, k))
                    .map(|(_, v)| u64::from(v))
                    .sum();
                if supplied > 0 {
                    parents[j].insert(i);
                    covered += supplied;
                    if covered >= qty {
                        break;
                    }
                }
            }
        }
    }

    let mut in_or = alloc::vec![false; n];
    let mut or_groups = Vec::new();
    for alts in alternatives.values() {
        let members: Vec<usize> = (0..n)
            .filter(|&i| !in_or[i] && alts.iter().any(|a| a == plan.steps[i].primary().0))
            .collect();
        if members.len() >= 2 {
            for &m in &members {
                in_or[m] = true;
            }
            or_groups.push(members);
        }
    }

    let mut by_parents: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut order: Vec<Vec<usize>> = Vec::new();
    for i in (0..n).filter(|&i| !in_or[i]) {
        let key: Vec<usize> = parents[i].iter().copied().collect();
        if !by_parents.contains_key(&key) {
            order.push(key.clone());
        }
        by_parents.entry(key).or_default().push(i);
    }
    let and_groups = order.into_iter().filter_map(|k| by_parents.remove(&k)).collect();

    let edges = parents
        .iter()
        .enumerate()
        .flat_map(|(j, ps)| ps.iter().map(move |&i| (i, j)))
        .collect();
    let graph = GoalGraph {
        parents: parents.into_iter().map(|s| s.into_iter().collect()).collect(),
        edges,
        and_groups,
        or_groups,
    };
    if !graph.is_acyclic() {
        return Err(GraphError::CyclicPlan);
    }
    Ok(graph)
}
