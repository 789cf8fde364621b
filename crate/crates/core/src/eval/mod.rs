//! Prequential evaluation: windowed metrics, AUT, delayed-label scheduling,
//! and the online/offline window-size sweep.

mod metrics;
mod prequential;
mod sweep;

pub use metrics::{aut, metrics, ConfusionMatrix, MetricSeries, Metrics};
pub use prequential::{run_prequential, DelayPolicy, RunOutput, Windowing};
pub use sweep::{window_sweep, SweepPoint, WindowSweepConfig};
