//! Drift Detection Method: thresholds on the running error rate.

use serde::{Deserialize, Serialize};

use super::{DriftSignal, Monitor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct DdmConfig {
    /// Examples before any level may fire.
    pub min_samples: u64,
    pub warning_factor: f64,
    pub drift_factor: f64,
}

impl Default for DdmConfig {
    fn default() -> Self {
        Self { min_samples: 30, warning_factor: 2.0, drift_factor: 3.0 }
    }
}

/// DDM state: running error rate `p`, its standard error `s`, and the
/// minimum of `p + s` seen since the last reset.
///
/// Warning fires when `p + s >= p_min + warning_factor * s_min`, drift when
/// `p + s >= p_min + drift_factor * s_min`; drift resets all statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Ddm<S: Scalar> {
    config: DdmConfig,
    n: u64,
    p: S,
    p_min: S,
    s_min: S,
    level: DriftSignal,
}

impl<S: Scalar> Default for Ddm<S> {
    fn default() -> Self {
        Self::new(DdmConfig::default())
    }
}

impl<S: Scalar> Ddm<S> {
    pub fn new(config: DdmConfig) -> Self {
        Self {
            config,
            n: 0,
            p: S::zero(),
            p_min: S::infinity(),
            s_min: S::infinity(),
            level: DriftSignal::Normal,
        }
    }

    /// Restore a detector mid-stream (state injection for resumption and
    /// for exercising the threshold arithmetic directly).
    pub fn from_parts(config: DdmConfig, n: u64, p: S, p_min: S, s_min: S) -> Self {
        Self { config, n, p, p_min, s_min, level: DriftSignal::Normal }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn error_rate(&self) -> S {
        self.p
    }

    fn std_error(p: S, n: u64) -> S {
        (p * (S::one() - p) / S::from_count(n as usize)).sqrt()
    }

    /// Current monitored statistic `p + s`.
    pub fn statistic(&self) -> S {
        if self.n == 0 {
            return S::zero();
        }
        self.p + Self::std_error(self.p, self.n)
    }

    pub fn warning_threshold(&self) -> S {
        self.p_min + S::of(self.config.warning_factor) * self.s_min
    }

    pub fn drift_threshold(&self) -> S {
        self.p_min + S::of(self.config.drift_factor) * self.s_min
    }

    pub fn level(&self) -> DriftSignal {
        self.level
    }

    pub fn update(&mut self, error: bool) -> DriftSignal {
        self.n += 1;
        let x = if error { S::one() } else { S::zero() };
        self.p = self.p + (x - self.p) / S::from_count(self.n as usize);

        if self.n < self.config.min_samples {
            self.level = DriftSignal::Normal;
            return self.level;
        }

        // An error-free window would pin p, s, and both minima at zero and
        // satisfy every >= threshold vacuously, so levels and minima only
        // engage once an error basis exists.
        if self.p <= S::zero() {
            self.level = DriftSignal::Normal;
            return self.level;
        }

        let s = Self::std_error(self.p, self.n);
        if self.p + s < self.p_min + self.s_min {
            self.p_min = self.p;
            self.s_min = s;
        }

        self.level = if self.p + s >= self.drift_threshold() {
            let config = self.config;
            *self = Self::new(config);
            DriftSignal::Drift
        } else if self.p + s >= self.warning_threshold() {
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

impl<S: Scalar> Monitor<S> for Ddm<S> {
    fn update(&mut self, value: S) -> DriftSignal {
        Ddm::update(self, value >= S::of(0.5))
    }

    fn reset(&mut self) {
        Ddm::reset(self);
    }

    fn name(&self) -> &'static str {
        "ddm"
    }
}
