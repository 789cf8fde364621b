//! Incremental Hoeffding tree with binary presence splits.
//!
//! Leaves keep class-conditional presence counts per feature (feature mass
//! above zero), which fits sparse text vectors: threshold search over raw counts
//! buys nothing at desk scale. A leaf attempts a split every `grace_period`
//! examples; the split fires when the information-gain gap between the best
//! and second-best feature clears the Hoeffding bound
//! `eps = sqrt(R^2 ln(1/delta) / 2n)` with `R = log2(#classes)`, or when
//! `eps` has shrunk under the tie threshold.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, class_index, normalize_classes, to_proba, Learner};
use crate::features::FeatureVector;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct HoeffdingTreeConfig {
    /// Split confidence delta.
    pub split_confidence: f64,
    /// Examples (by weight) between split attempts at a leaf.
    pub grace_period: f64,
    /// Tie threshold tau.
    pub tie_threshold: f64,
}

impl Default for HoeffdingTreeConfig {
    fn default() -> Self {
        Self { split_confidence: 1e-7, grace_period: 200.0, tie_threshold: 0.05 }
    }
}

/// How many candidate features a split attempt may inspect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceMode {
    /// All observed features (plain Hoeffding tree).
    All,
    /// `ceil(sqrt(dim))` features drawn per attempt (random-forest style).
    Sqrt,
    /// A fixed number of features per attempt.
    Fixed(usize),
}

impl SubspaceMode {
    fn size(self, dim: usize) -> Option<usize> {
        match self {
            SubspaceMode::All => None,
            SubspaceMode::Sqrt => Some((dim as f64).sqrt().ceil() as usize),
            SubspaceMode::Fixed(k) => Some(k),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
struct LeafStats<S: Scalar> {
    /// Per-class example mass.
    class_counts: Vec<S>,
    /// feature -> per-class mass of examples with that feature present.
    present: BTreeMap<usize, Vec<S>>,
    /// Mass accumulated since the last split attempt.
    since_eval: S,
}

impl<S: Scalar> LeafStats<S> {
    fn new(k: usize) -> Self {
        Self { class_counts: vec![S::zero(); k], present: BTreeMap::new(), since_eval: S::zero() }
    }

    fn with_counts(class_counts: Vec<S>) -> Self {
        Self { class_counts, present: BTreeMap::new(), since_eval: S::zero() }
    }

    fn total(&self) -> S {
        self.class_counts.iter().copied().sum()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
enum Node<S: Scalar> {
    Leaf(LeafStats<S>),
    Split { feature: usize, absent: usize, present: usize },
}

/// Incremental Hoeffding tree classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HoeffdingTree<S: Scalar> {
    config: HoeffdingTreeConfig,
    classes: Vec<String>,
    nodes: Vec<Node<S>>,
    subspace: SubspaceMode,
    subspace_rng: Option<ChaCha8Rng>,
    dim: usize,
    n_splits: usize,
}

impl<S: Scalar> HoeffdingTree<S> {
    pub fn new(classes: Vec<String>, config: HoeffdingTreeConfig) -> Self {
        let classes = normalize_classes(classes);
        let k = classes.len();
        Self {
            config,
            classes,
            nodes: vec![Node::Leaf(LeafStats::new(k))],
            subspace: SubspaceMode::All,
            subspace_rng: None,
            dim: 0,
            n_splits: 0,
        }
    }

    /// Restrict split attempts to a random feature subset (used by the
    /// adaptive random forest).
    pub fn with_subspace(mut self, mode: SubspaceMode, seed: u64) -> Self {
        self.subspace = mode;
        self.subspace_rng = match mode {
            SubspaceMode::All => None,
            _ => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        self
    }

    pub fn n_splits(&self) -> usize {
        self.n_splits
    }

    /// Depth of the leaf an example would reach (root = 0).
    pub fn route_depth(&self, x: &FeatureVector<S>) -> usize {
        let mut node = 0;
        let mut depth = 0;
        while let Node::Split { feature, absent, present } = &self.nodes[node] {
            node = if x.get(*feature) > S::zero() { *present } else { *absent };
            depth += 1;
        }
        depth
    }

    fn leaf_for(&self, x: &FeatureVector<S>) -> usize {
        let mut node = 0;
        while let Node::Split { feature, absent, present } = &self.nodes[node] {
            node = if x.get(*feature) > S::zero() { *present } else { *absent };
        }
        node
    }

    fn scores(&self, x: &FeatureVector<S>) -> Vec<S> {
        match &self.nodes[self.leaf_for(x)] {
            Node::Leaf(stats) => stats.class_counts.clone(),
            Node::Split { .. } => unreachable!("leaf_for returns leaves"),
        }
    }

    pub fn learn_weighted(&mut self, x: &FeatureVector<S>, y: &str, weight: S) {
        if weight <= S::zero() {
            return;
        }
        self.dim = self.dim.max(x.dim());
        let c = class_index(&self.classes, y);
        let k = self.classes.len();
        let leaf_idx = self.leaf_for(x);
        let Node::Leaf(stats) = &mut self.nodes[leaf_idx] else { unreachable!() };
        stats.class_counts[c] += weight;
        stats.since_eval += weight;
        for (f, v) in x.iter() {
            if v > S::zero() {
                stats.present.entry(f).or_insert_with(|| vec![S::zero(); k])[c] += weight;
            }
        }
        if stats.since_eval.as_f64() >= self.config.grace_period {
            let Node::Leaf(stats) = &mut self.nodes[leaf_idx] else { unreachable!() };
            stats.since_eval = S::zero();
            self.attempt_split(leaf_idx);
        }
    }

    /// Hoeffding bound at observed mass `n`:
    /// `sqrt(R^2 ln(1/delta) / 2n)` with `R = log2(#classes)`.
    pub fn hoeffding_bound(&self, n: S) -> S {
        let range = S::of((self.classes.len() as f64).log2());
        (range * range * S::of(1.0 / self.config.split_confidence).ln() / (S::of(2.0) * n)).sqrt()
    }

    fn attempt_split(&mut self, leaf_idx: usize) {
        let observed: Vec<usize> = match &self.nodes[leaf_idx] {
            Node::Leaf(stats) => {
                if stats.class_counts.iter().filter(|&&c| c > S::zero()).count() < 2 {
                    return;
                }
                stats.present.keys().copied().collect()
            }
            Node::Split { .. } => return,
        };
        let candidates = self.subsample_features(observed);
        if candidates.is_empty() {
            return;
        }

        let Node::Leaf(stats) = &self.nodes[leaf_idx] else { return };
        let base = entropy(&stats.class_counts);
        let n = stats.total();
        let mut best: Option<(usize, S)> = None;
        let mut second_gain = S::zero();
        for f in candidates {
            let gain = info_gain(base, &stats.class_counts, &stats.present[&f], n);
            match best {
                Some((_, bg)) if gain > bg => {
                    second_gain = bg;
                    best = Some((f, gain));
                }
                Some(_) => second_gain = second_gain.max(gain),
                None => best = Some((f, gain)),
            }
        }
        let Some((feature, best_gain)) = best else { return };
        if best_gain <= S::zero() {
            return;
        }
        let eps = self.hoeffding_bound(n);
        if !(best_gain - second_gain >= eps || eps < S::of(self.config.tie_threshold)) {
            return;
        }

        let present_counts = stats.present[&feature].clone();
        let absent_counts: Vec<S> = stats
            .class_counts
            .iter()
            .zip(&present_counts)
            .map(|(&t, &p)| (t - p).max(S::zero()))
            .collect();
        let absent = self.nodes.len();
        let present = absent + 1;
        self.nodes.push(Node::Leaf(LeafStats::with_counts(absent_counts)));
        self.nodes.push(Node::Leaf(LeafStats::with_counts(present_counts)));
        self.nodes[leaf_idx] = Node::Split { feature, absent, present };
        self.n_splits += 1;
    }

    /// Restrict the observed features to the configured subspace, in index
    /// order.
    fn subsample_features(&mut self, features: Vec<usize>) -> Vec<usize> {
        let (Some(m), Some(rng)) = (self.subspace.size(self.dim), self.subspace_rng.as_mut())
        else {
            return features;
        };
        if m >= features.len() {
            return features;
        }
        let chosen = rand::seq::index::sample(rng, features.len(), m);
        let mut picked: Vec<usize> = chosen.iter().map(|i| features[i]).collect();
        picked.sort_unstable();
        picked
    }
}

fn entropy<S: Scalar>(counts: &[S]) -> S {
    let total: S = counts.iter().copied().sum();
    if total <= S::zero() {
        return S::zero();
    }
    let mut h = S::zero();
    for &c in counts {
        if c > S::zero() {
            let p = c / total;
            h -= p * p.log2();
        }
    }
    h
}

/// Information gain of the binary presence split.
fn info_gain<S: Scalar>(base: S, class_counts: &[S], present: &[S], n: S) -> S {
    let absent: Vec<S> =
        class_counts.iter().zip(present).map(|(&t, &p)| (t - p).max(S::zero())).collect();
    let w_present: S = present.iter().copied().sum();
    let w_absent: S = absent.iter().copied().sum();
    base - (w_present / n) * entropy(present) - (w_absent / n) * entropy(&absent)
}

impl<S: Scalar> Learner<S> for HoeffdingTree<S> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn learn_one(&mut self, x: &FeatureVector<S>, y: &str) {
        self.learn_weighted(x, y, S::one());
    }

    fn predict_one(&self, x: &FeatureVector<S>) -> String {
        self.classes[argmax(&self.scores(x))].clone()
    }

    fn predict_proba(&self, x: &FeatureVector<S>) -> BTreeMap<String, S> {
        to_proba(&self.classes, &self.scores(x))
    }

    fn reset(&mut self) {
        let k = self.classes.len();
        self.nodes = vec![Node::Leaf(LeafStats::new(k))];
        self.dim = 0;
        self.n_splits = 0;
    }
}
