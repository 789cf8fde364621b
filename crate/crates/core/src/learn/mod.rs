//! Incremental classifiers and a batch one-class anomaly model.

mod forest;
mod hoeffding;
mod isolation;
mod naive_bayes;

pub use forest::{AdaptiveRandomForest, ArfConfig};
pub use hoeffding::{HoeffdingTree, HoeffdingTreeConfig, SubspaceMode};
pub use isolation::{average_path_length, IsoNode, IsoTree, IsolationForest, IsolationForestConfig};
pub use naive_bayes::NaiveBayes;

use std::collections::BTreeMap;

use crate::features::FeatureVector;
use crate::scalar::Scalar;

/// Incremental classifier contract.
///
/// Before any `learn_one`, `predict_one` returns the default label (the
/// lexicographically first class) with uniform scores. Learn and predict
/// calls may interleave in any order. `predict_proba` sums to 1 within
/// 1e-9 after any learn sequence.
pub trait Learner<S: Scalar>: Send {
    /// Class alphabet, sorted lexicographically.
    fn classes(&self) -> &[String];
    fn learn_one(&mut self, x: &FeatureVector<S>, y: &str);
    /// Warm-up learning for bootstrap passes: trains the model but leaves
    /// any internal drift monitors untouched, so they start fresh on the
    /// live stream. Defaults to `learn_one`.
    fn learn_warm(&mut self, x: &FeatureVector<S>, y: &str) {
        self.learn_one(x, y);
    }
    fn predict_one(&self, x: &FeatureVector<S>) -> String;
    fn predict_proba(&self, x: &FeatureVector<S>) -> BTreeMap<String, S>;
    /// Forget everything learned; configuration and alphabet survive.
    fn reset(&mut self);
}

/// Sorted, deduplicated class alphabet.
pub(crate) fn normalize_classes(mut classes: Vec<String>) -> Vec<String> {
    assert!(!classes.is_empty(), "learner needs a non-empty class alphabet");
    classes.sort();
    classes.dedup();
    classes
}

pub(crate) fn class_index(classes: &[String], label: &str) -> usize {
    classes
        .binary_search_by(|c| c.as_str().cmp(label))
        .unwrap_or_else(|_| panic!("label {label:?} not in class alphabet {classes:?}"))
}

/// Index of the maximal score; ties go to the lower index, i.e. the
/// lexicographically smaller label.
pub(crate) fn argmax<S: Scalar>(scores: &[S]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Normalize scores into a probability map over the alphabet; all-zero
/// scores become the uniform distribution.
pub(crate) fn to_proba<S: Scalar>(classes: &[String], scores: &[S]) -> BTreeMap<String, S> {
    let total: S = scores.iter().copied().sum();
    let k = S::from_count(classes.len());
    classes
        .iter()
        .zip(scores)
        .map(|(c, &s)| (c.clone(), if total > S::zero() { s / total } else { S::one() / k }))
        .collect()
}
