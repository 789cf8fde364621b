//! Online/offline detection-window sweep over system-call traces.
//!
//! For each proportion `p`, every test trace is scored over sliding windows
//! covering its first `ceil(p * len)` calls; the trace is flagged anomalous
//! when any window's isolation-forest score clears the threshold. The
//! forest is fitted on normal-class windows of the training split only, and
//! the threshold is picked on the training split by F1 grid search.

use serde::{Deserialize, Serialize};

use super::metrics::{metrics, ConfusionMatrix, Metrics};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::featurize::{VocabConfig, VocabFeaturizer};
use crate::generate::{Trace, TraceLabel};
use crate::learn::{IsolationForest, IsolationForestConfig};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct WindowSweepConfig {
    /// Prefix proportions in (0, 1]; 1.0 is the full trace ("offline").
    pub proportions: Vec<f64>,
    /// Sliding-window width in system calls.
    pub window_width: usize,
    /// Leading fraction of traces used for fitting and threshold selection.
    pub train_fraction: f64,
    pub forest: IsolationForestConfig,
}

impl Default for WindowSweepConfig {
    fn default() -> Self {
        Self {
            proportions: vec![0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0],
            window_width: 15,
            train_fraction: 0.5,
            forest: IsolationForestConfig::default(),
        }
    }
}

impl WindowSweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.proportions.is_empty() {
            return Err(Error::InvalidConfig("proportions must be non-empty".into()));
        }
        if self.proportions.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
            return Err(Error::InvalidConfig(
                "every proportion must lie in (0, 1]: zero-length prefixes are meaningless".into(),
            ));
        }
        if self.window_width == 0 {
            return Err(Error::InvalidConfig("window_width must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::BadSplitFraction(self.train_fraction));
        }
        Ok(())
    }
}

/// Metrics at one sweep proportion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SweepPoint<S: Scalar> {
    pub proportion: f64,
    pub metrics: Metrics<S>,
    pub threshold: f64,
}

/// Sliding windows of `width` (stride 1) over the first `upto` calls; a
/// prefix shorter than one window yields that prefix as a single window.
fn windows(calls: &[String], upto: usize, width: usize) -> Vec<&[String]> {
    let upto = upto.min(calls.len());
    if upto == 0 {
        return Vec::new();
    }
    if upto < width {
        return vec![&calls[..upto]];
    }
    (0..=upto - width).map(|s| &calls[s..s + width]).collect()
}

fn window_vector<S: Scalar>(featurizer: &VocabFeaturizer, window: &[String]) -> FeatureVector<S> {
    featurizer.transform_tokens(window)
}

struct ScoredTrace {
    label: TraceLabel,
    len: usize,
    /// Score of the window starting at each position (full windows only).
    full_window_scores: Vec<f64>,
    /// max(full_window_scores[0..=i]).
    prefix_max: Vec<f64>,
}

impl ScoredTrace {
    /// Maximum window score over the first `upto` calls.
    fn max_score_upto<S: Scalar>(
        &self,
        trace: &Trace,
        featurizer: &VocabFeaturizer,
        forest: &IsolationForest<S>,
        upto: usize,
        width: usize,
    ) -> f64 {
        if upto < width || self.full_window_scores.is_empty() {
            // Single truncated window.
            let w = windows(&trace.calls, upto, width);
            return forest.score(&window_vector::<S>(featurizer, w[0])).as_f64();
        }
        self.prefix_max[upto - width]
    }
}

/// Run the sweep; returns one point per configured proportion, in the given
/// order.
pub fn window_sweep<S: Scalar>(
    traces: &[Trace],
    config: &WindowSweepConfig,
) -> Result<Vec<SweepPoint<S>>> {
    config.validate()?;
    if traces.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n_train = ((config.train_fraction * traces.len() as f64).ceil() as usize).min(traces.len());
    let (train, test) = traces.split_at(n_train);
    if test.is_empty() {
        return Err(Error::BadSplitFraction(config.train_fraction));
    }
    let width = config.window_width;

    // Featurizer and forest come from normal-class training windows only.
    let normal_windows: Vec<&[String]> = train
        .iter()
        .filter(|t| t.label == TraceLabel::Normal)
        .flat_map(|t| windows(&t.calls, t.calls.len(), width))
        .collect();
    if normal_windows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let featurizer = VocabFeaturizer::fit_token_lists(
        VocabConfig { normalize: Some(false), ..VocabConfig::counts() },
        normal_windows.iter().copied(),
    )?;
    let points: Vec<FeatureVector<S>> =
        normal_windows.iter().map(|w| window_vector(&featurizer, w)).collect();
    let forest = IsolationForest::fit(config.forest, &points)?;

    let score_trace = |t: &Trace| -> ScoredTrace {
        let full_window_scores: Vec<f64> = windows(&t.calls, t.calls.len(), width)
            .into_iter()
            .map(|w| forest.score(&window_vector::<S>(&featurizer, w)).as_f64())
            .collect();
        let mut prefix_max = Vec::with_capacity(full_window_scores.len());
        let mut best = f64::NEG_INFINITY;
        for &s in &full_window_scores {
            best = best.max(s);
            prefix_max.push(best);
        }
        ScoredTrace { label: t.label, len: t.calls.len(), full_window_scores, prefix_max }
    };

    // Threshold: grid over the training traces' full-length max scores,
    // maximizing F1; ties keep the smallest threshold.
    let train_scored: Vec<ScoredTrace> = train.iter().map(score_trace).collect();
    let mut candidates: Vec<f64> = train_scored
        .iter()
        .map(|s| s.prefix_max.last().copied().unwrap_or(0.5))
        .collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    candidates.dedup();
    let mut threshold = 0.5;
    let mut best_f1 = -1.0;
    for &cand in &candidates {
        let mut cm = ConfusionMatrix::new();
        for s in &train_scored {
            let max = s.prefix_max.last().copied().unwrap_or(0.5);
            let verdict = if max >= cand { TraceLabel::Anomalous } else { TraceLabel::Normal };
            cm.record(s.label.as_str(), verdict.as_str());
        }
        let m: Metrics<f64> = metrics(&cm, TraceLabel::Anomalous.as_str())?;
        if m.f1 > best_f1 {
            best_f1 = m.f1;
            threshold = cand;
        }
    }

    let test_scored: Vec<(usize, ScoredTrace)> =
        test.iter().map(score_trace).enumerate().collect();

    let mut out = Vec::with_capacity(config.proportions.len());
    for &p in &config.proportions {
        let mut cm = ConfusionMatrix::new();
        for (i, scored) in &test_scored {
            let trace = &test[*i];
            let upto = ((p * scored.len as f64).ceil() as usize).clamp(1, scored.len);
            let max = scored.max_score_upto(trace, &featurizer, &forest, upto, width);
            let verdict = if max >= threshold { TraceLabel::Anomalous } else { TraceLabel::Normal };
            cm.record(scored.label.as_str(), verdict.as_str());
        }
        out.push(SweepPoint { proportion: p, metrics: metrics(&cm, TraceLabel::Anomalous.as_str())?, threshold });
    }
    Ok(out)
}
