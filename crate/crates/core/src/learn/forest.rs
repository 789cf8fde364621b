//! Adaptive random forest: Hoeffding trees under online bagging, each tree
//! watched by its own drift monitors.
//!
//! Every labeled example reaches each tree with a Poisson(lambda) weight.
//! A per-tree warning monitor starts a background tree that trains alongside
//! but never votes; the drift monitor swaps the background tree in and
//! resets both monitors. Ensemble prediction sums per-tree class scores.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::hoeffding::{HoeffdingTree, HoeffdingTreeConfig, SubspaceMode};
use super::{argmax, normalize_classes, to_proba, Learner};
use crate::detect::{Adwin, AdwinConfig, DriftSignal};
use crate::features::FeatureVector;
use crate::generate::derive_seed;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct ArfConfig {
    pub n_trees: usize,
    /// Poisson rate for online bagging; `None` trains every tree with
    /// weight 1 (bagging off).
    pub lambda: Option<f64>,
    pub subspace: SubspaceMode,
    /// Per-tree ADWIN monitors; `None` disables drift adaptation entirely.
    pub warning_delta: Option<f64>,
    pub drift_delta: Option<f64>,
    pub tree: HoeffdingTreeConfig,
    pub seed: u64,
}

impl Default for ArfConfig {
    fn default() -> Self {
        Self {
            n_trees: 10,
            lambda: Some(6.0),
            subspace: SubspaceMode::Sqrt,
            warning_delta: Some(0.01),
            drift_delta: Some(0.002),
            tree: HoeffdingTreeConfig::default(),
            seed: 1,
        }
    }
}

impl ArfConfig {
    /// A single plain Hoeffding tree in forest clothing: no bagging, no
    /// subspace, no monitors. Useful as a reduction check.
    pub fn degenerate(seed: u64) -> Self {
        Self {
            n_trees: 1,
            lambda: None,
            subspace: SubspaceMode::All,
            warning_delta: None,
            drift_delta: None,
            tree: HoeffdingTreeConfig::default(),
            seed,
        }
    }
}

/// A tree-swap event: (ensemble example counter, tree index).
pub type SwapEvent = (u64, usize);

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct TreeSlot<S: Scalar> {
    tree: HoeffdingTree<S>,
    background: Option<HoeffdingTree<S>>,
    warning: Option<Adwin<S>>,
    drift: Option<Adwin<S>>,
    rng: ChaCha8Rng,
    fresh_counter: u64,
}

/// Adaptive random forest classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AdaptiveRandomForest<S: Scalar> {
    config: ArfConfig,
    classes: Vec<String>,
    slots: Vec<TreeSlot<S>>,
    n_seen: u64,
    swaps: Vec<SwapEvent>,
}

impl<S: Scalar> AdaptiveRandomForest<S> {
    pub fn new(classes: Vec<String>, config: ArfConfig) -> Self {
        let classes = normalize_classes(classes);
        let slots = (0..config.n_trees)
            .map(|i| {
                let tree_seed = derive_seed(config.seed, &format!("arf-tree-{i}"));
                TreeSlot {
                    tree: HoeffdingTree::new(classes.clone(), config.tree)
                        .with_subspace(config.subspace, derive_seed(tree_seed, "subspace")),
                    background: None,
                    warning: config.warning_delta.map(|delta| {
                        Adwin::new(AdwinConfig { delta, ..AdwinConfig::default() })
                    }),
                    drift: config.drift_delta.map(|delta| {
                        Adwin::new(AdwinConfig { delta, ..AdwinConfig::default() })
                    }),
                    rng: ChaCha8Rng::seed_from_u64(derive_seed(tree_seed, "bagging")),
                    fresh_counter: 0,
                }
            })
            .collect();
        Self { config, classes, slots, n_seen: 0, swaps: vec![] }
    }

    /// Tree-swap log (drift adaptations that replaced a voting tree).
    pub fn swap_events(&self) -> &[SwapEvent] {
        &self.swaps
    }

    fn scores(&self, x: &FeatureVector<S>) -> Vec<S> {
        let mut acc = vec![S::zero(); self.classes.len()];
        for slot in &self.slots {
            let proba = slot.tree.predict_proba(x);
            for (i, c) in self.classes.iter().enumerate() {
                acc[i] += proba[c];
            }
        }
        acc
    }
}

/// Knuth's Poisson sampler; deterministic under a seeded RNG.
fn poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u64 {
    let limit = (-lambda).exp();
    let mut k = 0u64;
    let mut p = 1.0f64;
    loop {
        p *= rng.random::<f64>();
        if p <= limit {
            return k;
        }
        k += 1;
    }
}

impl<S: Scalar> Learner<S> for AdaptiveRandomForest<S> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn learn_one(&mut self, x: &FeatureVector<S>, y: &str) {
        self.learn_inner(x, y, true);
    }

    fn learn_warm(&mut self, x: &FeatureVector<S>, y: &str) {
        self.learn_inner(x, y, false);
    }

    fn predict_one(&self, x: &FeatureVector<S>) -> String {
        self.classes[argmax(&self.scores(x))].clone()
    }

    fn predict_proba(&self, x: &FeatureVector<S>) -> BTreeMap<String, S> {
        to_proba(&self.classes, &self.scores(x))
    }

    fn reset(&mut self) {
        *self = Self::new(std::mem::take(&mut self.classes), self.config);
    }
}

impl<S: Scalar> AdaptiveRandomForest<S> {
    fn learn_inner(&mut self, x: &FeatureVector<S>, y: &str, monitor: bool) {
        self.n_seen += 1;
        let lambda = self.config.lambda;
        for (idx, slot) in self.slots.iter_mut().enumerate() {
            // Per-tree prequential error feeds the monitors before training.
            let (warned, drifted) = if monitor {
                let err = if slot.tree.predict_one(x) == y { S::zero() } else { S::one() };
                let warned = match slot.warning.as_mut() {
                    Some(w) => w.update(err) == DriftSignal::Drift,
                    None => false,
                };
                let drifted = match slot.drift.as_mut() {
                    Some(d) => d.update(err) == DriftSignal::Drift,
                    None => false,
                };
                (warned, drifted)
            } else {
                (false, false)
            };
            if drifted {
                slot.fresh_counter += 1;
                let seed = derive_seed(
                    derive_seed(self.config.seed, &format!("arf-tree-{idx}")),
                    &format!("fresh-{}", slot.fresh_counter),
                );
                let fresh = || {
                    HoeffdingTree::new(self.classes.clone(), self.config.tree)
                        .with_subspace(self.config.subspace, seed)
                };
                slot.tree = slot.background.take().unwrap_or_else(fresh);
                if let Some(w) = slot.warning.as_mut() {
                    w.reset();
                }
                if let Some(d) = slot.drift.as_mut() {
                    d.reset();
                }
                self.swaps.push((self.n_seen, idx));
            } else if warned && slot.background.is_none() {
                slot.fresh_counter += 1;
                let seed = derive_seed(
                    derive_seed(self.config.seed, &format!("arf-tree-{idx}")),
                    &format!("fresh-{}", slot.fresh_counter),
                );
                slot.background = Some(
                    HoeffdingTree::new(self.classes.clone(), self.config.tree)
                        .with_subspace(self.config.subspace, seed),
                );
            }

            let weight = match lambda {
                Some(l) => poisson(l, &mut slot.rng),
                None => 1,
            };
            if weight > 0 {
                let w = S::from_count(weight as usize);
                slot.tree.learn_weighted(x, y, w);
                if let Some(bg) = slot.background.as_mut() {
                    bg.learn_weighted(x, y, w);
                }
            }
        }
    }
}
