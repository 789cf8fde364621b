//! Experiment configuration: one JSON document describing a full run.
//!
//! Unknown keys are rejected everywhere; validation happens before any work
//! starts so schema problems exit with status 2.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use driftstream::detect::{AdwinConfig, DdmConfig, EddmConfig};
use driftstream::eval::WindowSweepConfig;
use driftstream::featurize::{HashConfig, VocabConfig};
use driftstream::generate::{GeneratorConfig, TraceConfig};
use driftstream::learn::{ArfConfig, HoeffdingTreeConfig, IsolationForestConfig};
use driftstream::pipeline::PipelineMode;
use driftstream::stream::StreamFormat;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum DatasetSpec {
    /// Load a stream from a file.
    File { path: PathBuf, format: StreamFormat },
    /// Generate the vocabulary-drift token stream.
    Generator(GeneratorConfig),
    /// Generate labeled system-call traces (window-sweep experiments).
    Traces(TraceConfig),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum FeaturizerSpec {
    Bow(VocabConfig),
    Tfidf(VocabConfig),
    Hashing(HashConfig),
}

impl Default for FeaturizerSpec {
    fn default() -> Self {
        FeaturizerSpec::Tfidf(VocabConfig::tfidf())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum LearnerSpec {
    Nb {},
    Ht(HoeffdingTreeConfig),
    Arf(ArfConfig),
    Iforest(IsolationForestConfig),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum DetectorSpec {
    #[default]
    None,
    Ddm(DdmConfig),
    Eddm(EddmConfig),
    Adwin(AdwinConfig),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ResamplingSpec {
    #[default]
    None,
    TemporalUnder {
        period_length: i64,
    },
    TemporalOver {
        period_length: i64,
        #[serde(default = "default_k_neighbors")]
        k_neighbors: usize,
        #[serde(default = "default_target_ratio")]
        target_ratio: f64,
    },
}

fn default_k_neighbors() -> usize {
    5
}

fn default_target_ratio() -> f64 {
    1.0
}

/// Scalar or list form of the label delay.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DelaySpec {
    One(i64),
    Many(Vec<i64>),
}

impl Default for DelaySpec {
    fn default() -> Self {
        DelaySpec::One(0)
    }
}

impl DelaySpec {
    pub fn values(&self) -> Vec<i64> {
        match self {
            DelaySpec::One(d) => vec![*d],
            DelaySpec::Many(ds) => ds.clone(),
        }
    }

    pub fn is_list(&self) -> bool {
        matches!(self, DelaySpec::Many(_))
    }
}

fn default_split_fraction() -> f64 {
    0.5
}

fn default_window_w() -> usize {
    1_000
}

/// Full declarative description of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub featurizer: FeaturizerSpec,
    pub learner: LearnerSpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default = "default_mode")]
    pub mode: PipelineMode,
    #[serde(default)]
    pub delay_days: DelaySpec,
    #[serde(default = "default_split_fraction")]
    pub split_fraction: f64,
    /// Metric window size in scored records.
    #[serde(default = "default_window_w")]
    pub window_w: usize,
    /// Calendar windowing in days; overrides `window_w` when set.
    #[serde(default)]
    pub calendar_days: Option<i64>,
    #[serde(default)]
    pub resampling: ResamplingSpec,
    /// Window-sweep settings for trace datasets.
    #[serde(default)]
    pub sweep: WindowSweepConfig,
    #[serde(default = "default_positive")]
    pub positive_label: String,
    pub seed: u64,
    pub output_dir: PathBuf,
}

fn default_mode() -> PipelineMode {
    PipelineMode::NoDetector
}

fn default_positive() -> String {
    "malicious".to_owned()
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| format!("config schema error: {e}"))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), String> {
        match &self.dataset {
            DatasetSpec::Generator(g) => g.validate().map_err(|e| e.to_string())?,
            DatasetSpec::Traces(t) => {
                t.validate().map_err(|e| e.to_string())?;
                if !matches!(self.learner, LearnerSpec::Iforest(_)) {
                    return Err("trace datasets run the window sweep and need the iforest learner".into());
                }
            }
            DatasetSpec::File { .. } => {}
        }
        if matches!(self.learner, LearnerSpec::Iforest(_))
            && !matches!(self.dataset, DatasetSpec::Traces(_))
        {
            return Err("the iforest learner is batch one-class and only runs on trace datasets".into());
        }
        if let FeaturizerSpec::Hashing(h) = &self.featurizer {
            h.validate().map_err(|e| e.to_string())?;
            if self.mode == PipelineMode::RetrainExtractor {
                return Err(
                    "the hashing featurizer is stateless; retrain_extractor mode has nothing to refit"
                        .into(),
                );
            }
        }
        match (self.mode, &self.detector) {
            (PipelineMode::NoDetector, DetectorSpec::None) => {}
            (PipelineMode::NoDetector, _) => {
                return Err("mode no_detector requires detector none".into())
            }
            (_, DetectorSpec::None) => {
                return Err(format!("mode {:?} requires a detector", self.mode))
            }
            _ => {}
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(format!("split_fraction {} must lie in (0, 1)", self.split_fraction));
        }
        if self.window_w == 0 {
            return Err("window_w must be positive".into());
        }
        if let Some(d) = self.calendar_days {
            if d <= 0 {
                return Err("calendar_days must be positive".into());
            }
        }
        if self.delay_days.values().iter().any(|&d| d < 0) {
            return Err("delay_days must be nonnegative".into());
        }
        if self.delay_days.values().is_empty() {
            return Err("delay_days list must be non-empty".into());
        }
        match &self.resampling {
            ResamplingSpec::None => {}
            ResamplingSpec::TemporalUnder { period_length }
            | ResamplingSpec::TemporalOver { period_length, .. } => {
                if *period_length <= 0 {
                    return Err("resampling period_length must be positive".into());
                }
                if let ResamplingSpec::TemporalOver { target_ratio, k_neighbors, .. } = &self.resampling {
                    if !(*target_ratio > 0.0 && *target_ratio <= 1.0) {
                        return Err("target_ratio must lie in (0, 1]".into());
                    }
                    if *k_neighbors == 0 {
                        return Err("k_neighbors must be positive".into());
                    }
                }
                if matches!(self.dataset, DatasetSpec::Traces(_)) {
                    return Err("resampling applies to labeled record streams, not traces".into());
                }
            }
        }
        self.sweep.validate().map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Stable key identifying the model configuration (everything except
    /// the delay), used by reports to line runs up against their delay-0
    /// baseline.
    pub fn config_key(&self) -> String {
        let featurizer = match &self.featurizer {
            FeaturizerSpec::Bow(_) => "bow",
            FeaturizerSpec::Tfidf(_) => "tfidf",
            FeaturizerSpec::Hashing(_) => "hashing",
        };
        let learner = match &self.learner {
            LearnerSpec::Nb {} => "nb",
            LearnerSpec::Ht(_) => "ht",
            LearnerSpec::Arf(_) => "arf",
            LearnerSpec::Iforest(_) => "iforest",
        };
        let detector = match &self.detector {
            DetectorSpec::None => "none",
            DetectorSpec::Ddm(_) => "ddm",
            DetectorSpec::Eddm(_) => "eddm",
            DetectorSpec::Adwin(_) => "adwin",
        };
        let mode = match self.mode {
            PipelineMode::NoDetector => "no_detector",
            PipelineMode::StaticExtractor => "static_extractor",
            PipelineMode::RetrainExtractor => "retrain_extractor",
        };
        format!("{featurizer}/{learner}/{detector}/{mode}/seed{}", self.seed)
    }
}
