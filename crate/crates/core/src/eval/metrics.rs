//! Confusion-matrix metrics and the area-under-time aggregate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Counts of (true label, predicted label) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: BTreeMap<(String, String), u64>,
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, true_label: &str, predicted: &str) {
        *self.counts.entry((true_label.to_owned(), predicted.to_owned())).or_insert(0) += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, true_label: &str, predicted: &str) -> u64 {
        self.counts.get(&(true_label.to_owned(), predicted.to_owned())).copied().unwrap_or(0)
    }

    /// Correctly classified total (matrix trace).
    pub fn trace(&self) -> u64 {
        self.counts.iter().filter(|((t, p), _)| t == p).map(|(_, &n)| n).sum()
    }

    pub fn true_positives(&self, positive: &str) -> u64 {
        self.count(positive, positive)
    }

    pub fn false_positives(&self, positive: &str) -> u64 {
        self.counts.iter().filter(|((t, p), _)| p == positive && t != positive).map(|(_, &n)| n).sum()
    }

    pub fn false_negatives(&self, positive: &str) -> u64 {
        self.counts.iter().filter(|((t, p), _)| t == positive && p != positive).map(|(_, &n)| n).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        self.counts.iter().map(|((t, p), &n)| (t.as_str(), p.as_str(), n))
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for ((t, p), n) in &other.counts {
            *self.counts.entry((t.clone(), p.clone())).or_insert(0) += n;
        }
    }
}

/// Scalar metrics derived from a confusion matrix.
///
/// Precision is undefined when nothing was predicted positive and recall
/// when nothing is positive; both map to 0 with the matching `*_defined`
/// flag cleared, so downstream aggregates (AUT) stay total while the
/// accuracy pitfall stays visible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Metrics<S: Scalar> {
    pub accuracy: S,
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub precision_defined: bool,
    pub recall_defined: bool,
}

/// Accuracy, precision, recall, and F1 with `positive` as the target class.
pub fn metrics<S: Scalar>(cm: &ConfusionMatrix, positive: &str) -> Result<Metrics<S>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::EmptyMatrix);
    }
    let tp = cm.true_positives(positive);
    let fp = cm.false_positives(positive);
    let fn_ = cm.false_negatives(positive);

    let accuracy = S::from_count(cm.trace() as usize) / S::from_count(total as usize);
    let precision_defined = tp + fp > 0;
    let precision = if precision_defined {
        S::from_count(tp as usize) / S::from_count((tp + fp) as usize)
    } else {
        S::zero()
    };
    let recall_defined = tp + fn_ > 0;
    let recall = if recall_defined {
        S::from_count(tp as usize) / S::from_count((tp + fn_) as usize)
    } else {
        S::zero()
    };
    let f1 = if precision + recall > S::zero() {
        S::of(2.0) * precision * recall / (precision + recall)
    } else {
        S::zero()
    };
    Ok(Metrics { accuracy, precision, recall, f1, precision_defined, recall_defined })
}

/// Ordered (window-index, value) series; indices are implicit 0..n.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MetricSeries<S: Scalar> {
    values: Vec<S>,
}

impl<S: Scalar> MetricSeries<S> {
    pub fn new() -> Self {
        Self { values: Vec::new() }
    }

    pub fn from_values(values: Vec<S>) -> Self {
        Self { values }
    }

    pub fn push(&mut self, value: S) {
        self.values.push(value);
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, S)> + '_ {
        self.values.iter().copied().enumerate()
    }

    /// Mean over the last half of the windows (rounded up).
    pub fn final_half_mean(&self) -> S {
        if self.values.is_empty() {
            return S::zero();
        }
        let start = self.values.len() / 2;
        let tail = &self.values[start..];
        tail.iter().copied().sum::<S>() / S::from_count(tail.len())
    }
}

/// Area Under Time: normalized trapezoid over equal-width windows,
/// `AUT = (1/(N-1)) * sum (f_k + f_{k+1}) / 2`.
pub fn aut<S: Scalar>(series: &MetricSeries<S>) -> Result<S> {
    let v = series.values();
    if v.len() < 2 {
        return Err(Error::ShortSeries(v.len()));
    }
    let total: S = v.windows(2).map(|w| (w[0] + w[1]) / S::of(2.0)).sum();
    Ok(total / S::from_count(v.len() - 1))
}
