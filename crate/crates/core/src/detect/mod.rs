//! Supervised concept-drift detectors.
//!
//! DDM and EDDM monitor the prequential error signal and expose two levels,
//! warning and drift; ADWIN compares sub-windows of an adaptively sized
//! window and has no warning level. All three consume labeled outcomes only:
//! under delayed labels they update when the label arrives, not at
//! prediction time.

mod adwin;
mod ddm;
mod eddm;

pub use adwin::{Adwin, AdwinConfig};
pub use ddm::{Ddm, DdmConfig};
pub use eddm::{Eddm, EddmConfig};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Three-valued detector verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftSignal {
    Normal,
    Warning,
    Drift,
}

impl DriftSignal {
    pub fn as_str(self) -> &'static str {
        match self {
            DriftSignal::Normal => "normal",
            DriftSignal::Warning => "warning",
            DriftSignal::Drift => "drift",
        }
    }
}

/// Detector abstraction used by pipelines and ensembles.
///
/// `value` is the monitored statistic for this example: DDM and EDDM expect
/// a 0/1 error indicator (anything >= 0.5 counts as an error), ADWIN accepts
/// any real in [0, 1]. Emitting `Drift` leaves the detector reset and ready
/// for the next concept.
pub trait Monitor<S: Scalar>: Send {
    fn update(&mut self, value: S) -> DriftSignal;
    fn reset(&mut self);
    fn name(&self) -> &'static str;
}
