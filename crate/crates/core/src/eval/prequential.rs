//! Prequential harness with delayed-label scheduling.
//!
//! Records are processed in stream order. Before a record at time `t` is
//! processed, every pending label whose effective availability is <= `t` is
//! delivered, in availability order with id as the tie-break. Every
//! prediction is scored against the eventual true label regardless of when
//! (or whether) that label reaches the model.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::metrics::{aut, metrics, ConfusionMatrix, MetricSeries, Metrics};
use crate::error::Result;
use crate::pipeline::{Pipeline, PipelineEvent, Prediction};
use crate::scalar::Scalar;
use crate::stream::{Stream, StreamRecord};

/// Uniform label delay on top of per-record availability:
/// `effective = max(label_available_at, timestamp + delay_days)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayPolicy {
    pub delay_days: i64,
}

impl DelayPolicy {
    pub fn immediate() -> Self {
        Self { delay_days: 0 }
    }

    pub fn effective(&self, record: &StreamRecord) -> i64 {
        record.label_available_at.max(record.timestamp + self.delay_days)
    }
}

/// Metric windowing over the scored prediction sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Windowing {
    /// Tumbling windows of `n` scored predictions (the default, 1000).
    Records(usize),
    /// Calendar periods of `n` days of stream time.
    CalendarDays(i64),
}

impl Default for Windowing {
    fn default() -> Self {
        Windowing::Records(1_000)
    }
}

/// Output of one prequential run.
#[derive(Debug, Clone)]
pub struct RunOutput<S: Scalar> {
    /// Per-window metrics in window order.
    pub windows: Vec<Metrics<S>>,
    /// Cumulative confusion matrix over all scored predictions.
    pub confusion: ConfusionMatrix,
    /// Final cumulative metrics.
    pub final_metrics: Metrics<S>,
    /// Pipeline event log (warnings and drifts).
    pub events: Vec<PipelineEvent>,
    /// Per-record prediction log in processing order.
    pub predictions: Vec<Prediction>,
    /// Scored predictions (true label known to the evaluator).
    pub n_scored: u64,
    /// Labels actually delivered to the model within the stream.
    pub n_delivered: u64,
}

impl<S: Scalar> RunOutput<S> {
    pub fn series(&self, metric: impl Fn(&Metrics<S>) -> S) -> MetricSeries<S> {
        MetricSeries::from_values(self.windows.iter().map(metric).collect())
    }

    pub fn f1_series(&self) -> MetricSeries<S> {
        self.series(|m| m.f1)
    }

    pub fn aut_f1(&self) -> Result<S> {
        aut(&self.f1_series())
    }

    pub fn aut_precision(&self) -> Result<S> {
        aut(&self.series(|m| m.precision))
    }

    pub fn aut_recall(&self) -> Result<S> {
        aut(&self.series(|m| m.recall))
    }

    pub fn aut_accuracy(&self) -> Result<S> {
        aut(&self.series(|m| m.accuracy))
    }

    pub fn drift_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == "drift").count()
    }

    pub fn undefined_precision_windows(&self) -> usize {
        self.windows.iter().filter(|m| !m.precision_defined).count()
    }
}

/// Run a bootstrapped pipeline prequentially over `stream`.
///
/// Unlabeled records are predicted but neither scored nor ever delivered.
/// Labels whose effective availability falls beyond the stream's end never
/// reach the model (`n_delivered` counts the ones that did).
pub fn run_prequential<S: Scalar>(
    pipeline: &mut Pipeline<S>,
    stream: &Stream,
    delay: DelayPolicy,
    windowing: Windowing,
    positive: &str,
) -> Result<RunOutput<S>> {
    let records = stream.records();
    // Min-heap of (availability, id, record index).
    let mut due: BinaryHeap<Reverse<(i64, String, usize)>> = BinaryHeap::new();
    let mut predictions = Vec::with_capacity(records.len());
    let mut windows = Vec::new();
    let mut window_cm = ConfusionMatrix::new();
    let mut window_count = 0usize;
    let mut current_period: Option<i64> = None;
    let mut total_cm = ConfusionMatrix::new();
    let mut n_scored = 0u64;
    let mut n_delivered = 0u64;
    let period_origin = records.first().map(|r| r.timestamp).unwrap_or(0);

    for (idx, record) in records.iter().enumerate() {
        while let Some(Reverse((avail, _, _))) = due.peek() {
            if *avail > record.timestamp {
                break;
            }
            let Reverse((_, _, due_idx)) = due.pop().expect("peeked");
            let due_record = &records[due_idx];
            let label = due_record.true_label.as_deref().expect("only labeled records are queued");
            pipeline.deliver_label(due_record, label)?;
            n_delivered += 1;
        }

        // Calendar windows close when stream time crosses a period boundary.
        if let Windowing::CalendarDays(days) = windowing {
            let period = (record.timestamp - period_origin).div_euclid(days);
            if let Some(open) = current_period {
                if period != open && window_cm.total() > 0 {
                    windows.push(metrics(&window_cm, positive)?);
                    window_cm = ConfusionMatrix::new();
                }
            }
            current_period = Some(period);
        }

        let prediction = pipeline.process(record)?;
        if let Some(true_label) = record.true_label.as_deref() {
            window_cm.record(true_label, &prediction.pred);
            total_cm.record(true_label, &prediction.pred);
            n_scored += 1;
            due.push(Reverse((delay.effective(record), record.id.clone(), idx)));

            if let Windowing::Records(w) = windowing {
                window_count += 1;
                if window_count == w {
                    windows.push(metrics(&window_cm, positive)?);
                    window_cm = ConfusionMatrix::new();
                    window_count = 0;
                }
            }
        }
        predictions.push(prediction);
    }
    if window_cm.total() > 0 {
        windows.push(metrics(&window_cm, positive)?);
    }

    let final_metrics = metrics(&total_cm, positive)?;
    Ok(RunOutput {
        windows,
        confusion: total_cm,
        final_metrics,
        events: pipeline.events().to_vec(),
        predictions,
        n_scored,
        n_delivered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::{VocabConfig, VocabExtractor, VocabFeaturizer};
    use crate::generate::{generate_text_stream, GeneratorConfig};
    use crate::learn::{Learner, NaiveBayes};
    use crate::pipeline::{PipelineConfig, PipelineFactories, PipelineMode};
    use crate::stream::temporal_split;

    fn nb_factories() -> PipelineFactories<f64> {
        PipelineFactories {
            extractor: Box::new(|corpus| {
                Ok(Box::new(VocabExtractor::fit(VocabConfig::tfidf(), corpus)?))
            }),
            learner: Box::new(|classes| Box::new(NaiveBayes::new(classes.to_vec()))),
        }
    }

    fn no_detector_pipeline(train: &Stream) -> Pipeline<f64> {
        Pipeline::bootstrap(
            train,
            PipelineConfig::new(PipelineMode::NoDetector),
            nb_factories(),
            None,
        )
        .unwrap()
    }

    fn stream_of(n: usize, seed: u64) -> Stream {
        generate_text_stream(&GeneratorConfig {
            n_records: n,
            drift_at: vec![],
            vocab_size: 40,
            tokens_per_record: 8,
            seed,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    // Independent simple-loop oracle: delay 0 + NoDetector equals classic
    // test-then-train, record for record.
    #[test]
    fn delay_zero_equals_simple_loop_oracle() {
        let stream = stream_of(200, 21);
        let (train, test) = temporal_split(&stream, 0.5).unwrap();
        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy::immediate(),
            Windowing::Records(25),
            "malicious",
        )
        .unwrap();

        // Oracle: same extractor fit, same learner, plain loop.
        let extractor = VocabFeaturizer::fit(VocabConfig::tfidf(), train.records()).unwrap();
        let mut learner = NaiveBayes::<f64>::new(train.classes());
        for r in train.records() {
            learner.learn_warm(&extractor.transform(r), r.true_label.as_deref().unwrap());
        }
        let mut reference = Vec::new();
        for r in test.records() {
            let x = extractor.transform(r);
            reference.push(learner.predict_one(&x));
            learner.learn_one(&x, r.true_label.as_deref().unwrap());
        }
        let got: Vec<String> = out.predictions.iter().map(|p| p.pred.clone()).collect();
        assert_eq!(got, reference);
        assert_eq!(out.n_scored, 100);
        assert_eq!(out.n_delivered, 100 - 1, "last record's label has no successor to precede");
    }

    // Scheduling rule: a record predicted at day t with delay N joins model
    // updates only once stream time reaches t + N.
    #[test]
    fn delayed_label_participates_only_after_availability() {
        let mut records = Vec::new();
        for day in 0..20 {
            records.push(StreamRecord::new(
                format!("r{day:02}"),
                day,
                vec![if day % 2 == 0 { "x" } else { "y" }.to_owned()],
                Some(if day % 2 == 0 { "benign" } else { "malicious" }.to_owned()),
            ));
        }
        let stream = Stream::new(records).unwrap();
        let (train, test) = temporal_split(&stream, 0.25).unwrap();
        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy { delay_days: 2 },
            Windowing::default(),
            "malicious",
        )
        .unwrap();
        // Records at days 5..19; a label from day d arrives at d+2, so the
        // labels of the last two records never arrive.
        assert_eq!(out.n_delivered, out.n_scored - 2);
    }

    #[test]
    fn delay_beyond_span_freezes_the_model() {
        let stream = stream_of(300, 22);
        let (train, test) = temporal_split(&stream, 0.5).unwrap();

        let mut frozen = no_detector_pipeline(&train);
        let frozen_preds: Vec<String> = test
            .records()
            .iter()
            .map(|r| frozen.process(r).unwrap().pred)
            .collect();

        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy { delay_days: 10_000 },
            Windowing::Records(50),
            "malicious",
        )
        .unwrap();
        assert_eq!(out.n_delivered, 0);
        let got: Vec<String> = out.predictions.iter().map(|p| p.pred.clone()).collect();
        assert_eq!(got, frozen_preds, "never-updated model must equal frozen-model scoring");
    }

    #[test]
    fn windows_cover_all_scored_predictions() {
        let stream = stream_of(450, 23);
        let (train, test) = temporal_split(&stream, 0.4).unwrap();
        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy::immediate(),
            Windowing::Records(100),
            "malicious",
        )
        .unwrap();
        // 270 scored -> windows of 100, 100, 70.
        assert_eq!(out.windows.len(), 3);
        assert_eq!(out.confusion.total(), 270);
        assert_eq!(out.n_scored, 270);
    }

    #[test]
    fn calendar_windowing_closes_on_period_boundaries() {
        let stream = stream_of(1_000, 24);
        let (train, test) = temporal_split(&stream, 0.5).unwrap();
        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy::immediate(),
            Windowing::CalendarDays(30),
            "malicious",
        )
        .unwrap();
        // Test half spans ~182 days -> about 6 monthly windows.
        assert!(out.windows.len() >= 5 && out.windows.len() <= 8, "{} windows", out.windows.len());
    }

    // Brute-force recount: metrics from the harness match a recount over
    // the prediction log.
    #[test]
    fn final_metrics_match_prediction_log_recount() {
        let stream = stream_of(400, 25);
        let (train, test) = temporal_split(&stream, 0.5).unwrap();
        let mut pipeline = no_detector_pipeline(&train);
        let out = run_prequential(
            &mut pipeline,
            &test,
            DelayPolicy { delay_days: 3 },
            Windowing::Records(64),
            "malicious",
        )
        .unwrap();
        let mut cm = ConfusionMatrix::new();
        for (r, p) in test.records().iter().zip(&out.predictions) {
            assert_eq!(r.id, p.id);
            cm.record(r.true_label.as_deref().unwrap(), &p.pred);
        }
        assert_eq!(cm, out.confusion);
        let m: Metrics<f64> = metrics(&cm, "malicious").unwrap();
        assert_eq!(m, out.final_metrics);
    }
}
