//! Early Drift Detection Method: thresholds on the distance-error-rate,
//! i.e. the number of examples between consecutive classification errors.

use serde::{Deserialize, Serialize};

use super::{DriftSignal, Monitor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct EddmConfig {
    /// Error-distance observations before any level may fire.
    pub min_errors: u64,
    /// Warning when `(p' + 2s') / max(p' + 2s') < alpha`.
    pub alpha: f64,
    /// Drift when the ratio drops below `beta`.
    pub beta: f64,
}

impl Default for EddmConfig {
    fn default() -> Self {
        Self { min_errors: 30, alpha: 0.95, beta: 0.90 }
    }
}

/// EDDM state over distances between consecutive errors.
///
/// `p'` is the mean distance, `s'` its standard deviation; shrinking
/// distances push `(p' + 2s')` below its running maximum and the ratio
/// through the warning then drift thresholds. The level is re-evaluated on
/// errors and holds steady between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Eddm<S: Scalar> {
    config: EddmConfig,
    /// Examples seen since the last reset.
    n: u64,
    /// Example index of the previous error, if any.
    last_error_at: Option<u64>,
    /// Count / mean / M2 of observed distances (Welford).
    n_dist: u64,
    mean: S,
    m2: S,
    max_stat: S,
    level: DriftSignal,
}

impl<S: Scalar> Default for Eddm<S> {
    fn default() -> Self {
        Self::new(EddmConfig::default())
    }
}

impl<S: Scalar> Eddm<S> {
    pub fn new(config: EddmConfig) -> Self {
        Self {
            config,
            n: 0,
            last_error_at: None,
            n_dist: 0,
            mean: S::zero(),
            m2: S::zero(),
            max_stat: S::zero(),
            level: DriftSignal::Normal,
        }
    }

    pub fn distances_seen(&self) -> u64 {
        self.n_dist
    }

    pub fn mean_distance(&self) -> S {
        self.mean
    }

    pub fn level(&self) -> DriftSignal {
        self.level
    }

    /// Current `(p' + 2s') / max` ratio; 1 while no distances are recorded.
    pub fn ratio(&self) -> S {
        if self.n_dist == 0 || self.max_stat <= S::zero() {
            return S::one();
        }
        self.statistic() / self.max_stat
    }

    fn statistic(&self) -> S {
        let var = if self.n_dist > 0 { self.m2 / S::from_count(self.n_dist as usize) } else { S::zero() };
        self.mean + S::of(2.0) * var.sqrt()
    }

    pub fn update(&mut self, error: bool) -> DriftSignal {
        self.n += 1;
        if !error {
            return self.level;
        }
        let here = self.n;
        let Some(prev) = self.last_error_at.replace(here) else {
            return self.level;
        };

        let distance = S::from_count((here - prev) as usize);
        self.n_dist += 1;
        let delta = distance - self.mean;
        self.mean += delta / S::from_count(self.n_dist as usize);
        self.m2 += delta * (distance - self.mean);

        let stat = self.statistic();
        if stat > self.max_stat {
            self.max_stat = stat;
        }

        if self.n_dist < self.config.min_errors {
            self.level = DriftSignal::Normal;
            return self.level;
        }

        let ratio = self.ratio();
        self.level = if ratio < S::of(self.config.beta) {
            let config = self.config;
            *self = Self::new(config);
            DriftSignal::Drift
        } else if ratio < S::of(self.config.alpha) {
            DriftSignal::Warning
        } else {
            DriftSignal::Normal
        };
        self.level
    }

    pub fn reset(&mut self) {
        *self = Self::new(self.config);
    }
}

impl<S: Scalar> Monitor<S> for Eddm<S> {
    fn update(&mut self, value: S) -> DriftSignal {
        Eddm::update(self, value >= S::of(0.5))
    }

    fn reset(&mut self) {
        Eddm::reset(self);
    }

    fn name(&self) -> &'static str {
        "eddm"
    }
}
