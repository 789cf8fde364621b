//! Multinomial naive Bayes over summed feature mass per class.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{argmax, class_index, normalize_classes, to_proba, Learner};
use crate::features::FeatureVector;
use crate::scalar::Scalar;

/// Incremental multinomial naive Bayes with Laplace smoothing (alpha = 1).
///
/// Class priors are Laplace-smoothed document counts, so the untrained model
/// predicts the uniform prior. The likelihood of feature `f` under class `c`
/// is `(mass(c, f) + 1) / (total_mass(c) + dim)`; prediction is the argmax
/// of the log-posterior with ties broken toward the lexicographically
/// smaller label.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NaiveBayes<S: Scalar> {
    classes: Vec<String>,
    class_docs: Vec<u64>,
    n_docs: u64,
    feature_mass: Vec<BTreeMap<usize, S>>,
    total_mass: Vec<S>,
    dim: usize,
}

impl<S: Scalar> NaiveBayes<S> {
    pub fn new(classes: Vec<String>) -> Self {
        let classes = normalize_classes(classes);
        let k = classes.len();
        Self {
            classes,
            class_docs: vec![0; k],
            n_docs: 0,
            feature_mass: vec![BTreeMap::new(); k],
            total_mass: vec![S::zero(); k],
            dim: 0,
        }
    }

    fn log_posteriors(&self, x: &FeatureVector<S>) -> Vec<S> {
        let k = S::from_count(self.classes.len());
        let n = S::from_count(self.n_docs as usize);
        (0..self.classes.len())
            .map(|c| {
                let prior = (S::from_count(self.class_docs[c] as usize) + S::one()) / (n + k);
                let denom = self.total_mass[c] + S::from_count(self.dim);
                let mut lp = prior.ln();
                for (f, v) in x.iter() {
                    let mass = self.feature_mass[c].get(&f).copied().unwrap_or_else(S::zero);
                    lp += v * ((mass + S::one()) / denom).ln();
                }
                lp
            })
            .collect()
    }

    fn scores(&self, x: &FeatureVector<S>) -> Vec<S> {
        let lp = self.log_posteriors(x);
        let max = lp.iter().copied().fold(S::neg_infinity(), S::max);
        lp.iter().map(|&l| (l - max).exp()).collect()
    }
}

impl<S: Scalar> Learner<S> for NaiveBayes<S> {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn learn_one(&mut self, x: &FeatureVector<S>, y: &str) {
        let c = class_index(&self.classes, y);
        self.class_docs[c] += 1;
        self.n_docs += 1;
        self.dim = self.dim.max(x.dim());
        for (f, v) in x.iter() {
            *self.feature_mass[c].entry(f).or_insert_with(S::zero) += v;
            self.total_mass[c] += v;
        }
    }

    fn predict_one(&self, x: &FeatureVector<S>) -> String {
        self.classes[argmax(&self.scores(x))].clone()
    }

    fn predict_proba(&self, x: &FeatureVector<S>) -> BTreeMap<String, S> {
        to_proba(&self.classes, &self.scores(x))
    }

    fn reset(&mut self) {
        *self = Self::new(std::mem::take(&mut self.classes));
    }
}
