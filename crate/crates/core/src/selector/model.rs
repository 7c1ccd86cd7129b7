use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counts::ItemCounts;
use crate::craftworld::{Game, WorldState};
use crate::plan_dsl::GoalCall;

/// Everything the horizon model looks at for one (state, goal) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonInput {
    pub biome: String,
    pub inventory: ItemCounts,
    pub goal_id: String,
    /// Units the goal asks for.
    pub count: u32,
    /// Distance to the goal item's node; 0 for goals that do not travel.
    pub distance: f64,
}

impl HorizonInput {
    pub fn new(state: &WorldState, goal: &GoalCall, _game: &Game) -> Self {
        let (item, count) = goal.primary();
        let distance = if goal.verb.gathers() { state.distance(item) } else { 0.0 };
        Self {
            biome: state.biome.clone(),
            inventory: state.inventory.counts().clone(),
            goal_id: goal.goal_id(),
            count,
            distance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub input: HorizonInput,
    /// Steps from selection until the goal completed.
    pub horizon: u64,
    pub episode: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("state does not fit the model's features: {what}")]
    FeatureMismatch { what: String },
    #[error("no training records for goals: {goals:?}")]
    InsufficientData { goals: Vec<String> },
}

/// Layout of the feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub items: Vec<String>,
    pub clip: u32,
    pub biomes: Vec<String>,
    pub goals: Vec<String>,
    /// Travel load (count × distance) above this is treated as equal to it.
    pub max_load: f64,
    /// Centres of the radial bases over ln(1 + load).
    pub load_centres: Vec<f64>,
    pub load_width: f64,
}

impl FeatureSpec {
    pub fn from_records(records: &[TrajectoryRecord], extra_goals: &[String]) -> Self {
        let mut items = BTreeSet::new();
        let mut biomes = BTreeSet::new();
        let mut goals: BTreeSet<String> = extra_goals.iter().cloned().collect();
        for r in records {
            items.extend(r.input.inventory.keys().map(String::from));
            biomes.insert(r.input.biome.clone());
            goals.insert(r.input.goal_id.clone());
        }
        let max_load = 20_000.0;
        let top = libm::log1p(max_load);
        let k = 14;
        Self {
            items: items.into_iter().collect(),
            clip: 64,
            biomes: biomes.into_iter().collect(),
            goals: goals.into_iter().collect(),
            max_load,
            load_centres: (0..k).map(|i| top * i as f64 / (k - 1) as f64).collect(),
            load_width: top / (k - 1) as f64,
        }
    }

    pub fn dim(&self) -> usize {
        1 + self.items.len() + self.biomes.len() + self.goals.len() + 3 + self.load_centres.len()
    }

    pub fn features(&self, input: &HorizonInput) -> Result<Vec<f64>, ModelError> {
        let mut x = Vec::with_capacity(self.dim());
        x.push(1.0);
        let clip = f64::from(self.clip);
        for item in &self.items {
            let c = f64::from(input.inventory.get(item)).min(clip);
            x.push(libm::log1p(c) / libm::log1p(clip));
        }
        let b = self.biomes.iter().position(|b| *b == input.biome).ok_or_else(|| ModelError::FeatureMismatch {
            what: alloc::format!("unknown biome '{}'", input.biome),
        })?;
        x.extend((0..self.biomes.len()).map(|i| if i == b { 1.0 } else { 0.0 }));
        let g = self.goals.iter().position(|g| *g == input.goal_id).ok_or_else(|| ModelError::FeatureMismatch {
            what: alloc::format!("unknown goal '{}'", input.goal_id),
        })?;
        x.extend((0..self.goals.len()).map(|i| if i == g { 1.0 } else { 0.0 }));

        let count = f64::from(input.count.max(1));
        let load = (count * input.distance.max(0.0)).min(self.max_load);
        let ll = libm::log1p(load);
        x.push(libm::log1p(count.min(clip)) / libm::log1p(clip));
        x.push(load / self.max_load);
        x.push(ll / libm::log1p(self.max_load));
        for c in &self.load_centres {
            let z = (ll - c) / self.load_width;
            x.push(libm::exp(-z * z));
        }
        Ok(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TargetEncoding {
    /// All mass on the bucket containing the horizon.
    #[default]
    OneHot,
    /// Mass split between the two nearest midpoints so the target's
    /// expectation equals the horizon.
    TwoHot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub target: TargetEncoding,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            learning_rate: 0.03,
            batch_size: 64,
            seed: 0,
            shuffle: true,
            target: TargetEncoding::OneHot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub initial_loss: f64,
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
    /// Evaluation goals with no records; their rows come only from shared features.
    pub uncovered: Vec<String>,
}

/// Softmax regression over log-spaced horizon buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonModel {
    pub feature_spec: FeatureSpec,
    /// B + 1 ascending edges delimiting B buckets.
    pub bucket_edges: Vec<f64>,
    /// Row-major, feature_dim × B.
    pub weights: Vec<f64>,
    pub trained: bool,
    pub training_meta: TrainingMeta,
}

pub const BUCKETS: usize = 12;
pub const MIN_HORIZON: f64 = 1.0;
pub const MAX_HORIZON: f64 = 12_000.0;

pub fn log_edges(buckets: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (libm::log(lo), libm::log(hi));
    (0..=buckets).map(|i| libm::exp(a + (b - a) * i as f64 / buckets as f64)).collect()
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = libm::exp(*v - m);
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

impl HorizonModel {
    /// Zero weights: every input gets the uniform bucket distribution.
    pub fn untrained(feature_spec: FeatureSpec) -> Self {
        let dim = feature_spec.dim();
        Self {
            feature_spec,
            bucket_edges: log_edges(BUCKETS, MIN_HORIZON, MAX_HORIZON),
            weights: vec![0.0; dim * BUCKETS],
            trained: false,
            training_meta: TrainingMeta::default(),
        }
    }

    pub fn buckets(&self) -> usize {
        self.bucket_edges.len() - 1
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.bucket_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn bucket_of(&self, h: f64) -> usize {
        let b = self.buckets();
        self.bucket_edges[1..b].iter().take_while(|&&e| e <= h).count()
    }

    pub fn target(&self, h: f64, encoding: TargetEncoding) -> Vec<f64> {
        let b = self.buckets();
        let mut t = vec![0.0; b];
        match encoding {
            TargetEncoding::OneHot => t[self.bucket_of(h)] = 1.0,
            TargetEncoding::TwoHot => {
                let mids = self.midpoints();
                let h = h.clamp(mids[0], mids[b - 1]);
                let i = mids.windows(2).position(|w| h <= w[1]).unwrap_or(b - 2);
                let frac = (h - mids[i]) / (mids[i + 1] - mids[i]);
                t[i] = 1.0 - frac;
                t[i + 1] = frac;
            }
        }
        t
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let b = self.buckets();
        let mut z = vec![0.0; b];
        for (i, xi) in x.iter().enumerate() {
            if *xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * b..(i + 1) * b];
            for (zk, w) in z.iter_mut().zip(row) {
                *zk += xi * w;
            }
        }
        z
    }

    pub fn bucket_probs(&self, input: &HorizonInput) -> Result<Vec<f64>, ModelError> {
        let x = self.feature_spec.features(input)?;
        let mut z = self.logits(&x);
        softmax_in_place(&mut z);
        Ok(z)
    }

    /// Expected horizon over bucket midpoints.
    pub fn predict(&self, input: &HorizonInput) -> Result<f64, ModelError> {
        let p = self.bucket_probs(input)?;
        Ok(p.iter().zip(self.midpoints()).map(|(p, m)| p * m).sum())
    }

    /// Mean cross-entropy on a batch and its gradient with respect to the weights.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> (f64, Vec<f64>) {
        let b = self.buckets();
        let mut grad = vec![0.0; self.weights.len()];
        let mut loss = 0.0;
        let n = xs.len().max(1) as f64;
        for (x, t) in xs.iter().zip(targets) {
            let mut p = self.logits(x);
            softmax_in_place(&mut p);
            for (pk, tk) in p.iter().zip(t) {
                if *tk > 0.0 {
                    loss -= tk * libm::log(pk.max(1e-300));
                }
            }
            for (i, xi) in x.iter().enumerate() {
                if *xi == 0.0 {
                    continue;
                }
                let row = &mut grad[i * b..(i + 1) * b];
                for k in 0..b {
                    row[k] += xi * (p[k] - t[k]) / n;
                }
            }
        }
        (loss / n, grad)
    }

    pub fn loss(&self, xs: &[Vec<f64>], targets: &[Vec<f64>]) -> f64 {
        let b = self.buckets();
        let mut loss = 0.0;
        for (x, t) in xs.iter().zip(targets) {
            let mut p = self.logits(x);
            softmax_in_place(&mut p);
            for k in 0..b {
                if t[k] > 0.0 {
                    loss -= t[k] * libm::log(p[k].max(1e-300));
                }
            }
        }
        loss / xs.len().max(1) as f64
    }
}

/// Relative gap ‖a − n‖ / max(‖a‖, ‖n‖) between the analytic gradient and a
/// central difference over every weight. Norm-wise because single components
/// near 1e-20 are below what a difference quotient can resolve.
pub fn gradient_check(model: &HorizonModel, xs: &[Vec<f64>], targets: &[Vec<f64>], eps: f64) -> f64 {
    let (_, analytic) = model.loss_and_grad(xs, targets);
    let mut probe = model.clone();
    let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
    for i in 0..probe.weights.len() {
        let w = probe.weights[i];
        probe.weights[i] = w + eps;
        let up = probe.loss(xs, targets);
        probe.weights[i] = w - eps;
        let down = probe.loss(xs, targets);
        probe.weights[i] = w;
        let numeric = (up - down) / (2.0 * eps);
        diff += (analytic[i] - numeric) * (analytic[i] - numeric);
        na += analytic[i] * analytic[i];
        nn += numeric * numeric;
    }
    let scale = libm::sqrt(na.max(nn));
    if scale == 0.0 {
        return 0.0;
    }
    libm::sqrt(diff) / scale
}

/// Mini-batch Adam on cross-entropy. Deterministic given the config seed.
pub fn train_horizon(
    records: &[TrajectoryRecord],
    required_goals: &[String],
    config: &TrainConfig,
) -> Result<HorizonModel, ModelError> {
    if records.is_empty() {
        let mut goals = required_goals.to_vec();
        goals.sort();
        goals.dedup();
        return Err(ModelError::InsufficientData { goals });
    }
    let spec = FeatureSpec::from_records(records, required_goals);
    let mut model = HorizonModel::untrained(spec);
    let covered: BTreeSet<&str> = records.iter().map(|r| r.input.goal_id.as_str()).collect();
    let mut uncovered: Vec<String> = required_goals.iter().filter(|g| !covered.contains(g.as_str())).cloned().collect();
    uncovered.sort();
    uncovered.dedup();

    let xs: Vec<Vec<f64>> = records
        .iter()
        .map(|r| model.feature_spec.features(&r.input))
        .collect::<Result<_, _>>()?;
    let ts: Vec<Vec<f64>> = records.iter().map(|r| model.target(r.horizon as f64, config.target)).collect();
    let initial_loss = model.loss(&xs, &ts);

    let (beta1, beta2, adam_eps) = (0.9, 0.999, 1e-8);
    let mut m = vec![0.0; model.weights.len()];
    let mut v = vec![0.0; model.weights.len()];
    let mut t = 0i32;
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = config.batch_size.max(1);
    let mut curve = Vec::with_capacity(config.epochs);
    let mut bx: Vec<Vec<f64>> = Vec::with_capacity(batch);
    let mut bt: Vec<Vec<f64>> = Vec::with_capacity(batch);
    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            bx.clear();
            bt.clear();
            bx.extend(chunk.iter().map(|&i| xs[i].clone()));
            bt.extend(chunk.iter().map(|&i| ts[i].clone()));
            let (_, g) = model.loss_and_grad(&bx, &bt);
            t += 1;
            let c1 = 1.0 - libm::pow(beta1, f64::from(t));
            let c2 = 1.0 - libm::pow(beta2, f64::from(t));
            for i in 0..model.weights.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                model.weights[i] -= config.learning_rate * (m[i] / c1) / (libm::sqrt(v[i] / c2) + adam_eps);
            }
        }
        curve.push(model.loss(&xs, &ts));
    }
    model.trained = true;
    model.training_meta = TrainingMeta {
        config: config.clone(),
        initial_loss,
        loss_curve: curve,
        uncovered,
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(goal: &str, d: f64) -> HorizonInput {
        HorizonInput {
            biome: "plains".into(),
            inventory: ItemCounts::new(),
            goal_id: goal.into(),
            count: 1,
            distance: d,
        }
    }

    #[test]
    fn edges_are_log_spaced() {
        let e = log_edges(12, 1.0, 12_000.0);
        assert_eq!(e.len(), 13);
        assert!((e[0] - 1.0).abs() < 1e-12 && (e[12] - 12_000.0).abs() < 1e-6);
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn untrained_predicts_mean_midpoint() {
        let recs = [TrajectoryRecord {
            input: input("mine:log", 10.0),
            horizon: 50,
            episode: 0,
        }];
        let m = HorizonModel::untrained(FeatureSpec::from_records(&recs, &[]));
        let mids = m.midpoints();
        let mean = mids.iter().sum::<f64>() / mids.len() as f64;
        for d in [0.0, 10.0, 900.0] {
            assert!((m.predict(&input("mine:log", d)).unwrap() - mean).abs() < 1e-9);
        }
        assert!(matches!(m.predict(&input("mine:dirt", 1.0)), Err(ModelError::FeatureMismatch { .. })));
    }

    #[test]
    fn two_hot_expectation_is_the_horizon() {
        let m = HorizonModel::untrained(FeatureSpec::from_records(&[], &["x".into()]));
        let mids = m.midpoints();
        for h in [30.0, 150.0, 333.0, 2000.0] {
            let t = m.target(h, TargetEncoding::TwoHot);
            let e: f64 = t.iter().zip(&mids).map(|(a, b)| a * b).sum();
            assert!((e - h).abs() < 1e-9, "{h} -> {e}");
            assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.bucket_of(0.0), 0);
        assert_eq!(m.bucket_of(1e9), 11);
    }

    #[test]
    fn empty_data_lists_goals() {
        let err = train_horizon(&[], &["mine:log".into(), "craft:planks".into()], &TrainConfig::default()).unwrap_err();
        assert_eq!(
            err,
            ModelError::InsufficientData {
                goals: vec!["craft:planks".into(), "mine:log".into()]
            }
        );
    }
}
