//! Drift-aware stream pipelines.
//!
//! Three modes:
//!
//! - `NoDetector`: plain prequential learning, no drift handling.
//! - `StaticExtractor`: the extractor is fitted once; on drift only the
//!   classifier is replaced, trained on re-extracted buffered records.
//! - `RetrainExtractor`: on drift both the extractor and the classifier are
//!   rebuilt from buffered raw records, so a vocabulary that drifted out
//!   from under the extractor is re-learned.
//!
//! Labels arrive separately from records ([`Pipeline::deliver_label`]), so
//! delayed-label evaluation drives the same code path as the immediate
//! case. The warning buffer holds raw records, never feature vectors:
//! refitting an extractor needs raw tokens.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::detect::{DriftSignal, Monitor};
use crate::error::{Error, Result};
use crate::featurize::Featurizer;
use crate::learn::Learner;
use crate::scalar::Scalar;
use crate::stream::{Stream, StreamRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineMode {
    NoDetector,
    StaticExtractor,
    RetrainExtractor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    /// Recent labeled raw records kept for retraining when no warning
    /// buffer exists (ADWIN has no warning level).
    pub reservoir_capacity: usize,
    /// Stored predictions awaiting their label; exceeding this errors out
    /// rather than silently evicting.
    pub pending_capacity: usize,
}

impl PipelineConfig {
    pub fn new(mode: PipelineMode) -> Self {
        Self { mode, reservoir_capacity: 1_000, pending_capacity: 100_000 }
    }
}

/// One drift/warning event in the experiment log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineEvent {
    pub t: i64,
    pub kind: String,
    pub detector: String,
}

/// One scored prediction in the per-record log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub t: i64,
    pub pred: String,
    pub score: f64,
}

/// Fit a fresh extractor on a raw-record corpus.
pub type ExtractorFactory<S> =
    Box<dyn Fn(&[StreamRecord]) -> Result<Box<dyn Featurizer<S>>> + Send>;

/// Fresh untrained learner over a class alphabet.
pub type LearnerFactory<S> = Box<dyn Fn(&[String]) -> Box<dyn Learner<S>> + Send>;

/// Builders for replacement extractors and classifiers on drift.
pub struct PipelineFactories<S: Scalar> {
    pub extractor: ExtractorFactory<S>,
    pub learner: LearnerFactory<S>,
}

/// A bootstrapped pipeline: extractor E, classifier C, optional detector D,
/// warning buffer and reservoir of raw records.
pub struct Pipeline<S: Scalar> {
    config: PipelineConfig,
    factories: PipelineFactories<S>,
    classes: Vec<String>,
    extractor: Box<dyn Featurizer<S>>,
    learner: Box<dyn Learner<S>>,
    detector: Option<Box<dyn Monitor<S>>>,
    warning_buffer: Vec<StreamRecord>,
    reservoir: VecDeque<StreamRecord>,
    pending: BTreeMap<String, String>,
    delivered: BTreeSet<String>,
    events: Vec<PipelineEvent>,
    in_warning: bool,
    clock: i64,
    n_retrains: u64,
}

impl<S: Scalar> Pipeline<S> {
    /// Fit E on `train`, train C one pass over `transform(E, train)`, start
    /// D fresh. Every bootstrap record must be labeled.
    pub fn bootstrap(
        train: &Stream,
        config: PipelineConfig,
        factories: PipelineFactories<S>,
        detector: Option<Box<dyn Monitor<S>>>,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyStream);
        }
        if let Some(r) = train.records().iter().find(|r| r.true_label.is_none()) {
            return Err(Error::UnlabeledBootstrap(r.id.clone()));
        }
        match (config.mode, detector.is_some()) {
            (PipelineMode::NoDetector, true) => {
                return Err(Error::InvalidConfig("NoDetector mode cannot take a detector".into()))
            }
            (PipelineMode::StaticExtractor | PipelineMode::RetrainExtractor, false) => {
                return Err(Error::InvalidConfig(format!(
                    "{:?} mode needs a detector",
                    config.mode
                )))
            }
            _ => {}
        }

        let classes = train.classes();
        let extractor = (factories.extractor)(train.records())?;
        let mut learner = (factories.learner)(&classes);
        for r in train.records() {
            let x = extractor.transform(r);
            learner.learn_warm(&x, r.true_label.as_deref().expect("checked labeled"));
        }
        let clock = train.records().last().expect("non-empty").timestamp;
        Ok(Self {
            config,
            factories,
            classes,
            extractor,
            learner,
            detector,
            warning_buffer: Vec::new(),
            reservoir: VecDeque::new(),
            pending: BTreeMap::new(),
            delivered: BTreeSet::new(),
            events: Vec::new(),
            in_warning: false,
            clock,
            n_retrains: 0,
        })
    }

    /// Assemble a pipeline from an already-fitted extractor and an
    /// already-trained learner (custom bootstraps, e.g. over resampled
    /// feature sets, and snapshot resumption).
    pub fn from_parts(
        config: PipelineConfig,
        factories: PipelineFactories<S>,
        classes: Vec<String>,
        extractor: Box<dyn Featurizer<S>>,
        learner: Box<dyn Learner<S>>,
        detector: Option<Box<dyn Monitor<S>>>,
    ) -> Result<Self> {
        match (config.mode, detector.is_some()) {
            (PipelineMode::NoDetector, true) => {
                return Err(Error::InvalidConfig("NoDetector mode cannot take a detector".into()))
            }
            (PipelineMode::StaticExtractor | PipelineMode::RetrainExtractor, false) => {
                return Err(Error::InvalidConfig(format!(
                    "{:?} mode needs a detector",
                    config.mode
                )))
            }
            _ => {}
        }
        Ok(Self {
            config,
            factories,
            classes,
            extractor,
            learner,
            detector,
            warning_buffer: Vec::new(),
            reservoir: VecDeque::new(),
            pending: BTreeMap::new(),
            delivered: BTreeSet::new(),
            events: Vec::new(),
            in_warning: false,
            clock: i64::MIN,
            n_retrains: 0,
        })
    }

    pub fn mode(&self) -> PipelineMode {
        self.config.mode
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn extractor(&self) -> &dyn Featurizer<S> {
        self.extractor.as_ref()
    }

    pub fn learner(&self) -> &dyn Learner<S> {
        self.learner.as_ref()
    }

    pub fn events(&self) -> &[PipelineEvent] {
        &self.events
    }

    pub fn drift_events(&self) -> impl Iterator<Item = &PipelineEvent> + '_ {
        self.events.iter().filter(|e| e.kind == "drift")
    }

    pub fn n_retrains(&self) -> u64 {
        self.n_retrains
    }

    pub fn warning_buffer_len(&self) -> usize {
        self.warning_buffer.len()
    }

    pub fn reservoir_len(&self) -> usize {
        self.reservoir.len()
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Extract features with the current E and predict with the current C.
    /// The record's `true_label` is never read here; the prediction is
    /// remembered under the record's id until its label arrives.
    pub fn process(&mut self, record: &StreamRecord) -> Result<Prediction> {
        if self.pending.len() >= self.config.pending_capacity {
            return Err(Error::PendingOverflow(self.config.pending_capacity));
        }
        let x = self.extractor.transform(record);
        let label = self.learner.predict_one(&x);
        let score = self.learner.predict_proba(&x)[&label].as_f64();
        self.pending.insert(record.id.clone(), label.clone());
        self.clock = self.clock.max(record.timestamp);
        Ok(Prediction { id: record.id.clone(), t: record.timestamp, pred: label, score })
    }

    /// Present the ground-truth label of a previously processed record.
    ///
    /// The stored prediction is compared against `true_label`; the 0/1
    /// error feeds D, and the detector level picks the path: Normal
    /// updates C, Warning additionally buffers the raw record, Drift
    /// retrains per the pipeline mode and resets the detector.
    pub fn deliver_label(&mut self, record: &StreamRecord, true_label: &str) -> Result<DriftSignal> {
        if self.delivered.contains(&record.id) {
            return Err(Error::DuplicateDelivery(record.id.clone()));
        }
        let predicted = self
            .pending
            .remove(&record.id)
            .ok_or_else(|| Error::UnknownPrediction(record.id.clone()))?;
        self.delivered.insert(record.id.clone());

        let error = if predicted == true_label { S::zero() } else { S::one() };
        let signal = match self.detector.as_mut() {
            Some(d) => d.update(error),
            None => DriftSignal::Normal,
        };

        let mut labeled = record.clone();
        labeled.true_label = Some(true_label.to_owned());

        match signal {
            DriftSignal::Normal => {
                let x = self.extractor.transform(record);
                self.learner.learn_one(&x, true_label);
                self.push_reservoir(labeled);
                if self.in_warning {
                    // Aborted warning episode: buffered records go stale.
                    self.in_warning = false;
                    self.warning_buffer.clear();
                }
            }
            DriftSignal::Warning => {
                let x = self.extractor.transform(record);
                self.learner.learn_one(&x, true_label);
                self.push_reservoir(labeled.clone());
                self.warning_buffer.push(labeled);
                if !self.in_warning {
                    self.in_warning = true;
                    self.push_event("warning");
                }
            }
            DriftSignal::Drift => {
                self.push_event("drift");
                self.retrain()?;
                self.push_reservoir(labeled);
            }
        }
        Ok(signal)
    }

    /// Replace C (and E in RetrainExtractor mode) from the warning buffer,
    /// falling back to the reservoir when the buffer is empty.
    fn retrain(&mut self) -> Result<()> {
        let mut source: Vec<StreamRecord> = if self.warning_buffer.is_empty() {
            self.reservoir.iter().cloned().collect()
        } else {
            std::mem::take(&mut self.warning_buffer)
        };
        if source.is_empty() {
            return Err(Error::EmptyRetrainSource);
        }

        let distinct: BTreeSet<&str> = source.iter().filter_map(|r| r.true_label.as_deref()).collect();
        if distinct.len() < 2 && self.classes.len() > 1 {
            log::warn!(
                "drift retrain source is single-class ({distinct:?}); augmenting with the reservoir"
            );
            let known: BTreeSet<String> = source.iter().map(|r| r.id.clone()).collect();
            source.extend(self.reservoir.iter().filter(|r| !known.contains(&r.id)).cloned());
        }

        match self.config.mode {
            PipelineMode::NoDetector => unreachable!("NoDetector never sees a drift signal"),
            PipelineMode::StaticExtractor => {}
            PipelineMode::RetrainExtractor => {
                self.extractor = (self.factories.extractor)(&source)?;
            }
        }
        let mut learner = (self.factories.learner)(&self.classes);
        for r in &source {
            let x = self.extractor.transform(r);
            learner.learn_warm(&x, r.true_label.as_deref().expect("retrain source is labeled"));
        }
        self.learner = learner;
        self.warning_buffer.clear();
        self.in_warning = false;
        self.n_retrains += 1;
        Ok(())
    }

    fn push_reservoir(&mut self, record: StreamRecord) {
        if self.reservoir.len() == self.config.reservoir_capacity {
            self.reservoir.pop_front();
        }
        self.reservoir.push_back(record);
    }

    fn push_event(&mut self, kind: &str) {
        let detector = self.detector.as_ref().map(|d| d.name()).unwrap_or("none");
        self.events.push(PipelineEvent { t: self.clock, kind: kind.to_owned(), detector: detector.to_owned() });
    }
}
