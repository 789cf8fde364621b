//! Temporal-aware class-imbalance resampling.
//!
//! Undersampling and SMOTE-style oversampling both respect time periods:
//! removals keep each period's sub-concept mix intact, and synthetic
//! minority points only interpolate parents from the same period, so no
//! synthetic sample teleports a future concept into the past.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::generate::derive_seed;
use crate::scalar::Scalar;
use crate::stream::{Stream, StreamRecord};

/// Half-open, disjoint periods of `period_length` days anchored at the
/// stream's first timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodPartition {
    pub origin: i64,
    pub period_length: i64,
}

impl PeriodPartition {
    pub fn new(origin: i64, period_length: i64) -> Result<Self> {
        if period_length <= 0 {
            return Err(Error::InvalidConfig("period_length must be positive".into()));
        }
        Ok(Self { origin, period_length })
    }

    pub fn period_of(&self, timestamp: i64) -> i64 {
        (timestamp - self.origin).div_euclid(self.period_length)
    }
}

/// Within each period, downsample that period's majority class uniformly to
/// its minority count; counts are never pooled across periods. Single-class
/// periods are left untouched with a logged warning.
pub fn temporal_undersample(stream: &Stream, period_length: i64, seed: u64) -> Result<Stream> {
    let classes = stream.classes();
    if classes.len() != 2 || stream.records().iter().any(|r| r.true_label.is_none()) {
        return Err(Error::InvalidConfig(
            "temporal undersampling needs a fully labeled binary stream".into(),
        ));
    }
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let partition = PeriodPartition::new(stream.records()[0].timestamp, period_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "undersample"));

    // Group record indices per period, preserving stream order.
    let mut periods: std::collections::BTreeMap<i64, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, r) in stream.records().iter().enumerate() {
        periods.entry(partition.period_of(r.timestamp)).or_default().push(i);
    }

    let mut keep = vec![false; stream.len()];
    for (period, indices) in &periods {
        let (a, b): (Vec<usize>, Vec<usize>) = indices
            .iter()
            .partition(|&&i| stream.records()[i].true_label.as_deref() == Some(classes[0].as_str()));
        if a.is_empty() || b.is_empty() {
            log::warn!("period {period} has a single class; left untouched");
            for &i in indices {
                keep[i] = true;
            }
            continue;
        }
        let (minority, majority) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        for &i in &minority {
            keep[i] = true;
        }
        let mut pool = majority;
        pool.shuffle(&mut rng);
        for &i in pool.iter().take(minority.len()) {
            keep[i] = true;
        }
    }

    let records: Vec<StreamRecord> = stream
        .records()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep[*i])
        .map(|(_, r)| r.clone())
        .collect();
    Stream::new(records)
}

/// A labeled point in feature space with its first-seen time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureRecord<S: Scalar> {
    pub id: String,
    pub features: FeatureVector<S>,
    pub label: String,
    pub timestamp: i64,
}

/// A SMOTE-interpolated record: `features = a + u * (b - a)` for same-class
/// parents, timestamp interpolated the same way. Feature-space only: no
/// tokens exist, so raw-token pipelines must reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SyntheticRecord<S: Scalar> {
    pub record: FeatureRecord<S>,
    pub parents: (String, String),
    pub interpolation: S,
}

/// Output of an oversampling pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "kind", rename_all = "lowercase")]
pub enum ResampledRecord<S: Scalar> {
    Real(FeatureRecord<S>),
    Synthetic(SyntheticRecord<S>),
}

impl<S: Scalar> ResampledRecord<S> {
    pub fn record(&self) -> &FeatureRecord<S> {
        match self {
            ResampledRecord::Real(r) => r,
            ResampledRecord::Synthetic(s) => &s.record,
        }
    }

    pub fn is_synthetic(&self) -> bool {
        matches!(self, ResampledRecord::Synthetic(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct OversampleConfig {
    pub period_length: i64,
    pub k_neighbors: usize,
    /// Desired minority/majority count ratio after synthesis (1.0 =
    /// balanced). No synthetics are produced where the ratio is already met.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for OversampleConfig {
    fn default() -> Self {
        Self { period_length: 30, k_neighbors: 5, target_ratio: 1.0, seed: 1 }
    }
}

/// SMOTE with neighbor search restricted to same class and same period.
pub fn temporal_oversample<S: Scalar>(
    records: &[FeatureRecord<S>],
    config: &OversampleConfig,
) -> Result<Vec<ResampledRecord<S>>> {
    oversample(records, config, true)
}

/// Period-ignoring SMOTE control: same deficit rule, neighbors pooled
/// across all periods. Exists to make the leakage of naive oversampling
/// auditable next to the temporal variant.
pub fn naive_oversample<S: Scalar>(
    records: &[FeatureRecord<S>],
    config: &OversampleConfig,
) -> Result<Vec<ResampledRecord<S>>> {
    oversample(records, config, false)
}

fn oversample<S: Scalar>(
    records: &[FeatureRecord<S>],
    config: &OversampleConfig,
    restrict_periods: bool,
) -> Result<Vec<ResampledRecord<S>>> {
    if records.is_empty() {
        return Err(Error::EmptyStream);
    }
    if !(config.target_ratio > 0.0 && config.target_ratio <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target_ratio {} must lie in (0, 1]",
            config.target_ratio
        )));
    }
    if config.k_neighbors == 0 {
        return Err(Error::InvalidConfig("k_neighbors must be positive".into()));
    }
    let mut labels: Vec<&str> = records.iter().map(|r| r.label.as_str()).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::InvalidConfig("oversampling needs a binary-labeled set".into()));
    }
    let count_of = |l: &str| records.iter().filter(|r| r.label == l).count();
    let minority = if count_of(labels[0]) <= count_of(labels[1]) {
        labels[0].to_owned()
    } else {
        labels[1].to_owned()
    };

    let origin = records.iter().map(|r| r.timestamp).min().expect("non-empty");
    let partition = PeriodPartition::new(origin, config.period_length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "oversample"));

    // Period -> (minority indices, majority count).
    let mut periods: std::collections::BTreeMap<i64, (Vec<usize>, usize)> =
        std::collections::BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let slot = periods.entry(partition.period_of(r.timestamp)).or_default();
        if r.label == minority {
            slot.0.push(i);
        } else {
            slot.1 += 1;
        }
    }
    let all_minority: Vec<usize> =
        (0..records.len()).filter(|&i| records[i].label == minority).collect();

    let mut out: Vec<ResampledRecord<S>> =
        records.iter().cloned().map(ResampledRecord::Real).collect();
    let mut synth_id = 0usize;

    for (period, (minority_idx, majority_count)) in &periods {
        let deficit = ((config.target_ratio * *majority_count as f64).round() as usize)
            .saturating_sub(minority_idx.len());
        if deficit == 0 {
            continue;
        }
        let pool: &[usize] = if restrict_periods { minority_idx } else { &all_minority };
        if pool.len() < 2 {
            log::warn!(
                "period {period}: {} minority record(s), cannot synthesize {deficit} (no cross-period borrowing)",
                pool.len()
            );
            continue;
        }
        for _ in 0..deficit {
            let a_idx = pool[rng.random_range(0..pool.len())];
            let b_idx = nearest_neighbor_choice(records, pool, a_idx, config.k_neighbors, &mut rng);
            let u = S::of(rng.random::<f64>());
            let a = &records[a_idx];
            let b = &records[b_idx];
            let features = FeatureVector::lerp(&a.features, &b.features, u);
            let timestamp = (S::of(a.timestamp as f64)
                + u * S::of((b.timestamp - a.timestamp) as f64))
            .as_f64()
            .round() as i64;
            out.push(ResampledRecord::Synthetic(SyntheticRecord {
                record: FeatureRecord {
                    id: format!("syn_{synth_id:06}"),
                    features,
                    label: minority.clone(),
                    timestamp,
                },
                parents: (a.id.clone(), b.id.clone()),
                interpolation: u,
            }));
            synth_id += 1;
        }
    }
    Ok(out)
}

/// Pick uniformly among the `k` nearest same-pool neighbors of `a_idx`
/// (excluding itself), by Euclidean distance with index tie-break.
fn nearest_neighbor_choice<S: Scalar>(
    records: &[FeatureRecord<S>],
    pool: &[usize],
    a_idx: usize,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> usize {
    let a = &records[a_idx];
    let mut dists: Vec<(S, usize)> = pool
        .iter()
        .filter(|&&i| i != a_idx)
        .map(|&i| (a.features.sq_distance(&records[i].features), i))
        .collect();
    dists.sort_by(|x, y| x.partial_cmp(y).expect("finite distances"));
    let k = k.min(dists.len());
    dists[rng.random_range(0..k)].1
}
