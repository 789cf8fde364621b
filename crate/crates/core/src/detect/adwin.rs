//! ADaptive WINdowing: a variable-size window over a real-valued signal,
//! cut whenever two sub-windows have significantly different means.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{DriftSignal, Monitor};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct AdwinConfig {
    pub delta: f64,
    /// Buckets kept per exponential-histogram level.
    pub max_buckets: usize,
}

impl Default for AdwinConfig {
    fn default() -> Self {
        Self { delta: 0.002, max_buckets: 5 }
    }
}

/// One exponential-histogram bucket; its item count is `2^level`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct Bucket<S> {
    sum: S,
}

/// ADWIN detector.
///
/// The window is an exponential histogram: level `r` holds up to
/// `max_buckets` buckets of `2^r` items each, so counts and sums are kept
/// exactly and the window mean is always reconstructible. After every
/// update each bucket boundary is tested: for sub-windows of sizes
/// `n0`/`n1` with means `mu0`/`mu1`, a cut fires when
/// `|mu0 - mu1| >= sqrt(ln(4/delta') / (2m))` with `m = 1/(1/n0 + 1/n1)`
/// and `delta' = delta / W`. On a cut the older sub-window is dropped and
/// the scan repeats until no cut fires. ADWIN has no warning level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Adwin<S: Scalar> {
    config: AdwinConfig,
    /// `levels[r]` holds buckets of `2^r` items, oldest at the front.
    levels: Vec<VecDeque<Bucket<S>>>,
    window_len: u64,
    window_sum: S,
    drift_count: u64,
}

impl<S: Scalar> Default for Adwin<S> {
    fn default() -> Self {
        Self::new(AdwinConfig::default())
    }
}

impl<S: Scalar> Adwin<S> {
    pub fn new(config: AdwinConfig) -> Self {
        Self { config, levels: Vec::new(), window_len: 0, window_sum: S::zero(), drift_count: 0 }
    }

    pub fn window_len(&self) -> u64 {
        self.window_len
    }

    pub fn window_sum(&self) -> S {
        self.window_sum
    }

    /// Mean of the retained window (0 when empty).
    pub fn mean(&self) -> S {
        if self.window_len == 0 {
            S::zero()
        } else {
            self.window_sum / S::from_count(self.window_len as usize)
        }
    }

    pub fn drift_count(&self) -> u64 {
        self.drift_count
    }

    pub fn update(&mut self, value: S) -> DriftSignal {
        debug_assert!(value.is_finite());
        self.insert(value);
        if self.shrink() {
            self.drift_count += 1;
            DriftSignal::Drift
        } else {
            DriftSignal::Normal
        }
    }

    pub fn reset(&mut self) {
        let config = self.config;
        *self = Self::new(config);
    }

    fn insert(&mut self, value: S) {
        if self.levels.is_empty() {
            self.levels.push(VecDeque::new());
        }
        self.levels[0].push_back(Bucket { sum: value });
        self.window_len += 1;
        self.window_sum += value;

        // Compress: merging the two oldest buckets of a full level yields a
        // bucket newer than everything already on the next level.
        let mut level = 0;
        while level < self.levels.len() && self.levels[level].len() > self.config.max_buckets {
            let a = self.levels[level].pop_front().expect("level is over capacity");
            let b = self.levels[level].pop_front().expect("level is over capacity");
            if level + 1 == self.levels.len() {
                self.levels.push(VecDeque::new());
            }
            self.levels[level + 1].push_back(Bucket { sum: a.sum + b.sum });
            level += 1;
        }
    }

    /// Buckets oldest to newest as (item count, sum).
    fn buckets_oldest_first(&self) -> impl Iterator<Item = (u64, S)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .rev()
            .flat_map(|(r, row)| row.iter().map(move |b| (1u64 << r, b.sum)))
    }

    /// Repeatedly drop the older sub-window while any boundary cut fires.
    fn shrink(&mut self) -> bool {
        let mut dropped_any = false;
        while let Some(boundary) = self.find_cut() {
            self.drop_oldest_buckets(boundary + 1);
            dropped_any = true;
        }
        dropped_any
    }

    /// Index of the newest bucket boundary whose cut fires, if any.
    /// Boundary `i` puts buckets `0..=i` (oldest side) into the older
    /// sub-window.
    fn find_cut(&self) -> Option<usize> {
        if self.window_len < 2 {
            return None;
        }
        let total_n = S::from_count(self.window_len as usize);
        let delta_prime = S::of(self.config.delta) / total_n;
        let log_term = (S::of(4.0) / delta_prime).ln();

        let mut fired = None;
        let mut n0 = 0u64;
        let mut sum0 = S::zero();
        let buckets: Vec<(u64, S)> = self.buckets_oldest_first().collect();
        for (i, &(count, sum)) in buckets.iter().take(buckets.len() - 1).enumerate() {
            n0 += count;
            sum0 += sum;
            let n1 = self.window_len - n0;
            let s_n0 = S::from_count(n0 as usize);
            let s_n1 = S::from_count(n1 as usize);
            let mu0 = sum0 / s_n0;
            let mu1 = (self.window_sum - sum0) / s_n1;
            let m = S::one() / (S::one() / s_n0 + S::one() / s_n1);
            let eps_cut = (log_term / (S::of(2.0) * m)).sqrt();
            if (mu0 - mu1).abs() >= eps_cut {
                fired = Some(i);
            }
        }
        fired
    }

    fn drop_oldest_buckets(&mut self, mut k: usize) {
        while k > 0 {
            let Some((level, _)) =
                self.levels.iter().enumerate().rev().find(|(_, row)| !row.is_empty())
            else {
                break;
            };
            let bucket = self.levels[level].pop_front().expect("level checked non-empty");
            self.window_len -= 1 << level;
            self.window_sum -= bucket.sum;
            k -= 1;
        }
        // Clamp residue from float subtraction when the window empties.
        if self.window_len == 0 {
            self.window_sum = S::zero();
        }
    }
}

impl<S: Scalar> Monitor<S> for Adwin<S> {
    fn update(&mut self, value: S) -> DriftSignal {
        Adwin::update(self, value)
    }

    fn reset(&mut self) {
        Adwin::reset(self);
    }

    fn name(&self) -> &'static str {
        "adwin"
    }
}
