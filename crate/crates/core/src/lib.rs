//! Drift-aware data stream classification toolkit.
//!
//! Building blocks for stream-learning experiments on security-style data:
//! ordered record streams with seeded generators, textual feature extractors
//! with an explicit fit/transform lifecycle, incremental learners, concept
//! drift detectors with warning/drift levels, temporal resampling, and a
//! prequential evaluation harness that schedules delayed labels and reports
//! time-aware metrics.
//!
//! The numeric core is generic over a floating-point [`Scalar`]; the aliases
//! below pin everything to `f64`, which is what the CLI uses.

pub mod detect;
pub mod error;
pub mod eval;
pub mod features;
pub mod featurize;
pub mod generate;
pub mod learn;
pub mod pipeline;
pub mod resample;
pub mod scalar;
pub mod stream;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type used by the CLI and the aliases below.
pub type Value = f64;

pub type FeatureVec = features::FeatureVector<Value>;
pub type Ddm = detect::Ddm<Value>;
pub type Eddm = detect::Eddm<Value>;
pub type Adwin = detect::Adwin<Value>;
pub type NaiveBayes = learn::NaiveBayes<Value>;
pub type HoeffdingTree = learn::HoeffdingTree<Value>;
pub type AdaptiveRandomForest = learn::AdaptiveRandomForest<Value>;
pub type IsolationForest = learn::IsolationForest<Value>;
pub type Pipeline = pipeline::Pipeline<Value>;
pub type PipelineFactories = pipeline::PipelineFactories<Value>;
pub type RunOutput = eval::RunOutput<Value>;
pub type Metrics = eval::Metrics<Value>;
pub type MetricSeries = eval::MetricSeries<Value>;
