use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Inventory, MineRule, RecipeDb, WorldError};

/// Step cost of a successful skill attempt, as a fraction of its budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CostModel {
    Uniform { lo: f64, hi: f64 },
    Fixed { fraction: f64 },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::Uniform { lo: 0.1, hi: 0.4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub biomes: Vec<String>,
    /// Blocks covered per step.
    pub travel_speed: f64,
    pub despawn_per_step: f64,
    /// Stands in for "not reachable" so distances stay numeric.
    pub far_sentinel: f64,
    pub cost: CostModel,
    /// Replaces every skill's success probability, e.g. 1.0 for scripted runs.
    pub success_override: Option<f64>,
}

impl Default for WorldConfig {
    fn default() -> Self {
        Self {
            biomes: alloc::vec![String::from("plains"), String::from("forest")],
            travel_speed: 4.0,
            despawn_per_step: 1e-3,
            far_sentinel: 1e6,
            cost: CostModel::default(),
            success_override: None,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |m: &str| Err(WorldError::InvalidConfig(String::from(m)));
        if self.biomes.is_empty() {
            return bad("world config lists no biomes");
        }
        if !(self.travel_speed > 0.0) {
            return bad("travel_speed must be positive");
        }
        if !(0.0..=1.0).contains(&self.despawn_per_step) {
            return bad("despawn_per_step must be a probability");
        }
        match self.cost {
            CostModel::Uniform { lo, hi } if !(0.0 <= lo && lo <= hi && hi <= 1.0) => bad("uniform cost needs 0 <= lo <= hi <= 1"),
            CostModel::Fixed { fraction } if !(0.0..=1.0).contains(&fraction) => bad("fixed cost fraction must be in [0, 1]"),
            _ => Ok(()),
        }?;
        if let Some(p) = self.success_override {
            if !(0.0..=1.0).contains(&p) {
                return bad("success_override must be a probability");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobState {
    pub alive: bool,
    pub despawn_at: Option<u64>,
}

/// Ground truth for one episode.
#[derive(Debug, Clone)]
pub struct WorldState {
    pub biome: String,
    pub inventory: Inventory,
    pub equipped: Option<String>,
    pub steps_elapsed: u64,
    /// Episode step budget; execution never runs past it.
    pub step_cap: u64,
    pub node_distances: BTreeMap<String, f64>,
    /// Keyed by the drop item, like `node_distances`.
    pub mobs: BTreeMap<String, MobState>,
    pub(crate) far_sentinel: f64,
    pub(crate) despawn_per_step: f64,
    pub(crate) rng: ChaCha8Rng,
}

impl PartialEq for WorldState {
    fn eq(&self, other: &Self) -> bool {
        self.biome == other.biome
            && self.inventory == other.inventory
            && self.equipped == other.equipped
            && self.steps_elapsed == other.steps_elapsed
            && self.node_distances == other.node_distances
            && self.mobs == other.mobs
            && self.rng == other.rng
    }
}

pub(crate) fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Steps until a per-step event with probability `p` first fires.
pub(crate) fn geometric(rng: &mut ChaCha8Rng, p: f64) -> Option<u64> {
    if p <= 0.0 {
        return None;
    }
    if p >= 1.0 {
        return Some(1);
    }
    let u: f64 = rng.random();
    let k = libm::ceil(libm::log1p(-u) / libm::log1p(-p));
    Some(if k < 1.0 { 1 } else { k as u64 })
}

/// Fresh world for `seed`. The biome is drawn uniformly from the config unless `biome` forces one.
pub fn reset_world(seed: u64, config: &WorldConfig, recipes: &RecipeDb, biome: Option<&str>) -> Result<WorldState, WorldError> {
    config.validate()?;
    recipes.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let biome = match biome {
        Some(b) => String::from(b),
        None => config.biomes[rng.random_range(0..config.biomes.len())].clone(),
    };
    let mut state = WorldState {
        biome,
        inventory: Inventory::new(),
        equipped: None,
        steps_elapsed: 0,
        step_cap: u64::MAX,
        node_distances: BTreeMap::new(),
        mobs: BTreeMap::new(),
        far_sentinel: config.far_sentinel,
        despawn_per_step: config.despawn_per_step,
        rng,
    };
    for rule in &recipes.mine_rules {
        state.spawn(rule);
    }
    Ok(state)
}

impl WorldState {
    pub fn distance(&self, item: &str) -> f64 {
        self.node_distances.get(item).copied().unwrap_or(self.far_sentinel)
    }

    pub fn far_sentinel(&self) -> f64 {
        self.far_sentinel
    }

    pub fn reachable(&self, item: &str) -> bool {
        self.distance(item) < self.far_sentinel
    }

    /// Places (or replaces) the node for `rule` at a fresh distance.
    pub(crate) fn spawn(&mut self, rule: &MineRule) {
        let hosted = rule.host_biomes.iter().any(|b| *b == self.biome);
        let d = if hosted {
            uniform(&mut self.rng, rule.distance_range[0], rule.distance_range[1])
        } else {
            self.far_sentinel
        };
        self.node_distances.insert(rule.item.clone(), d);
        if rule.is_mob() {
            let despawn_at = if hosted {
                geometric(&mut self.rng, self.despawn_per_step).map(|k| self.steps_elapsed + k)
            } else {
                None
            };
            self.mobs.insert(rule.item.clone(), MobState { alive: hosted, despawn_at });
        }
    }

    /// Moves the clock forward and applies any despawns that came due.
    pub(crate) fn advance(&mut self, steps: u64, recipes: &RecipeDb) {
        self.steps_elapsed = self.steps_elapsed.saturating_add(steps);
        let due: Vec<String> = self
            .mobs
            .iter()
            .filter(|(_, m)| m.alive && m.despawn_at.map(|t| t <= self.steps_elapsed).unwrap_or(false))
            .map(|(k, _)| k.clone())
            .collect();
        for item in due {
            let respawn = recipes.mine_rule(&item).and_then(|r| r.respawn_distance_range);
            match respawn {
                Some([lo, hi]) => {
                    let d = uniform(&mut self.rng, lo, hi);
                    self.node_distances.insert(item.clone(), d);
                    let next = geometric(&mut self.rng, self.despawn_per_step).map(|k| self.steps_elapsed + k);
                    self.mobs.insert(item, MobState { alive: true, despawn_at: next });
                }
                None => {
                    self.node_distances.insert(item.clone(), self.far_sentinel);
                    self.mobs.insert(item, MobState { alive: false, despawn_at: None });
                }
            }
        }
    }

    pub(crate) fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn summary(&self) -> String {
        let items: Vec<String> = self.inventory.iter().map(|(k, v)| format!("{v} {k}")).collect();
        format!("in {} biome with {}", self.biome, items.join(", "))
    }
}
