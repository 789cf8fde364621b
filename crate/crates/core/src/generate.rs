//! Seeded synthetic generators.
//!
//! Real security streams cannot ship with the repo, so these generators
//! produce desk-scale stand-ins with controllable drift, imbalance, and
//! sub-concept structure: a token stream whose minority-class vocabulary is
//! replaced at configured drift days, and system-call traces where anomalies
//! are confined to bursts. Identical config + seed gives byte-identical
//! output on every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featurize::fnv1a64;
use crate::stream::{Stream, StreamRecord};

pub const LABEL_BENIGN: &str = "benign";
pub const LABEL_MALICIOUS: &str = "malicious";

/// Derive an independent sub-seed so each random choice (class assignment,
/// tokens, learner bagging, ...) has its own stream and knobs do not
/// perturb one another.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut bytes = Vec::with_capacity(tag.len() + 8);
    bytes.extend_from_slice(tag.as_bytes());
    bytes.extend_from_slice(&seed.to_le_bytes());
    fnv1a64(&bytes)
}

/// Per-period subclass mixture applied to generated records.
///
/// Period `p` covers days `[start + p*period_length, start + (p+1)*period_length)`;
/// periods past the last row reuse the final mixture. Weights need not sum
/// to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubclassSchedule {
    pub period_length: i64,
    pub mixtures: Vec<Vec<f64>>,
}

impl SubclassSchedule {
    fn validate(&self) -> Result<()> {
        if self.period_length <= 0 {
            return Err(Error::InvalidConfig("subclass period_length must be positive".into()));
        }
        if self.mixtures.is_empty() {
            return Err(Error::InvalidConfig("subclass_schedule needs at least one mixture".into()));
        }
        for row in &self.mixtures {
            if row.is_empty() || row.iter().any(|w| *w < 0.0) || row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::InvalidConfig("subclass mixture weights must be nonnegative with positive sum".into()));
            }
        }
        Ok(())
    }

    fn mixture_at(&self, day: i64, start_day: i64) -> &[f64] {
        let period = ((day - start_day) / self.period_length).max(0) as usize;
        &self.mixtures[period.min(self.mixtures.len() - 1)]
    }
}

/// Configuration of the vocabulary-drift token stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_records: usize,
    /// Fraction of malicious records, matched exactly up to rounding.
    pub class_ratio: f64,
    /// Epoch-days at which the malicious vocabulary is replaced wholesale.
    pub drift_at: Vec<i64>,
    /// Tokens per class-concept vocabulary.
    pub vocab_size: usize,
    pub tokens_per_record: usize,
    /// Probability that a token leaks from the other class's current vocabulary.
    pub noise: f64,
    pub subclass_schedule: Option<SubclassSchedule>,
    pub start_day: i64,
    pub span_days: i64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_records: 20_000,
            class_ratio: 0.18,
            drift_at: vec![250],
            vocab_size: 150,
            tokens_per_record: 20,
            noise: 0.05,
            subclass_schedule: None,
            start_day: 0,
            span_days: 365,
            seed: 1,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::InvalidConfig("n_records must be positive".into()));
        }
        if !(self.class_ratio > 0.0 && self.class_ratio < 1.0) {
            return Err(Error::InvalidConfig(format!("class_ratio {} must lie in (0,1)", self.class_ratio)));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidConfig(format!("noise {} must lie in [0,1)", self.noise)));
        }
        if self.vocab_size == 0 || self.tokens_per_record == 0 {
            return Err(Error::InvalidConfig("vocab_size and tokens_per_record must be positive".into()));
        }
        if self.span_days <= 0 {
            return Err(Error::InvalidConfig("span_days must be positive".into()));
        }
        let end = self.start_day + self.span_days;
        for pair in self.drift_at.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::InvalidConfig("drift_at must be strictly increasing".into()));
            }
        }
        if self.drift_at.iter().any(|&d| d <= self.start_day || d >= end) {
            return Err(Error::InvalidConfig(format!(
                "drift_at must fall inside the stream span ({}, {})",
                self.start_day, end
            )));
        }
        if let Some(s) = &self.subclass_schedule {
            s.validate()?;
        }
        Ok(())
    }
}

fn benign_token(j: usize) -> String {
    format!("ben_{j:04}")
}

fn malicious_token(concept: usize, j: usize) -> String {
    format!("mal{concept}_{j:04}")
}

/// Generate the vocabulary-drift stream described by `cfg`.
///
/// Benign records always draw from the stationary benign vocabulary.
/// Malicious records draw from concept `k` before drift point `k` and from
/// concept `k+1` after it; concept vocabularies are pairwise disjoint, so at
/// `noise = 0` a drift is a pure vocabulary swap.
pub fn generate_text_stream(cfg: &GeneratorConfig) -> Result<Stream> {
    cfg.validate()?;
    let n = cfg.n_records;

    // Exact class counts: shuffle positions, mark the first `m` malicious.
    let m = (cfg.class_ratio * n as f64).round() as usize;
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "classes")));
    let mut malicious = vec![false; n];
    for &p in &positions[..m] {
        malicious[p] = true;
    }

    let mut token_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "tokens"));
    let mut subclass_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "subclass"));

    let mut records = Vec::with_capacity(n);
    for (i, &is_mal) in malicious.iter().enumerate() {
        let day = cfg.start_day + (i as i64 * cfg.span_days) / n as i64;
        let concept = cfg.drift_at.iter().filter(|&&d| day >= d).count();
        let mut tokens = Vec::with_capacity(cfg.tokens_per_record);
        for _ in 0..cfg.tokens_per_record {
            let leak = cfg.noise > 0.0 && token_rng.random::<f64>() < cfg.noise;
            let from_malicious = is_mal != leak;
            let j = token_rng.random_range(0..cfg.vocab_size);
            tokens.push(if from_malicious { malicious_token(concept, j) } else { benign_token(j) });
        }
        let subclass = cfg.subclass_schedule.as_ref().map(|s| {
            let mix = s.mixture_at(day, cfg.start_day);
            format!("s{}", weighted_index(mix, &mut subclass_rng))
        });
        records.push(StreamRecord {
            id: format!("r{i:06}"),
            timestamp: day,
            true_label: Some(if is_mal { LABEL_MALICIOUS } else { LABEL_BENIGN }.to_owned()),
            label_available_at: day,
            tokens,
            subclass,
        });
    }
    Stream::new(records)
}

fn weighted_index(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Trace class label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceLabel {
    Normal,
    Anomalous,
}

impl TraceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceLabel::Normal => "normal",
            TraceLabel::Anomalous => "anomalous",
        }
    }
}

/// One system-call trace. Anomalous traces match the normal call
/// distribution everywhere except inside `burst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub id: String,
    pub calls: Vec<String>,
    pub label: TraceLabel,
    /// `[start, end)` span of the anomalous burst, when present.
    pub burst: Option<(usize, usize)>,
}

/// Configuration of the system-call trace generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub n_traces: usize,
    /// Inclusive range of trace lengths.
    pub trace_length_range: (usize, usize),
    pub syscall_alphabet_size: usize,
    pub anomaly_ratio: f64,
    pub anomaly_burst_length: usize,
    /// Burst calls come from an alphabet disjoint from the normal one;
    /// otherwise from a skewed distribution over the normal alphabet.
    pub disjoint_bursts: bool,
    /// Optional fraction range constraining where a burst may start.
    pub burst_start_range: Option<(f64, f64)>,
    pub seed: u64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            n_traces: 200,
            trace_length_range: (60, 160),
            syscall_alphabet_size: 12,
            anomaly_ratio: 0.15,
            anomaly_burst_length: 20,
            disjoint_bursts: true,
            burst_start_range: None,
            seed: 1,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traces == 0 || self.syscall_alphabet_size == 0 || self.anomaly_burst_length == 0 {
            return Err(Error::InvalidConfig("trace counts and sizes must be positive".into()));
        }
        let (lo, hi) = self.trace_length_range;
        if lo == 0 || lo > hi {
            return Err(Error::InvalidConfig(format!("bad trace_length_range ({lo}, {hi})")));
        }
        if !(0.0..=1.0).contains(&self.anomaly_ratio) {
            return Err(Error::InvalidConfig(format!("anomaly_ratio {} must lie in [0,1]", self.anomaly_ratio)));
        }
        if let Some((a, b)) = self.burst_start_range {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
                return Err(Error::InvalidConfig(format!("bad burst_start_range ({a}, {b})")));
            }
        }
        Ok(())
    }
}

fn normal_call(j: usize) -> String {
    format!("sc_{j:03}")
}

fn anomalous_call(j: usize) -> String {
    format!("an_{j:03}")
}

/// Fraction of normal calls replaced by a uniform draw (measurement noise
/// on top of the periodic service loop).
const TRACE_JITTER: f64 = 0.05;

/// Generate labeled system-call traces per `cfg`.
///
/// Normal traces model a service loop: a fixed periodic call pattern with a
/// small jitter rate, started at a per-trace phase. Anomalous traces are
/// identical except inside one burst, whose calls come from a disjoint
/// alphabet (disjoint mode) or from the rarely used upper half of the
/// normal alphabet. Either way a burst displaces the loop calls every
/// normal window is built from.
pub fn generate_traces(cfg: &TraceConfig) -> Result<Vec<Trace>> {
    cfg.validate()?;
    let n = cfg.n_traces;
    let m = (cfg.anomaly_ratio * n as f64).round() as usize;
    let mut positions: Vec<usize> = (0..n).collect();
    positions.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "trace-classes")));
    let mut anomalous = vec![false; n];
    for &p in &positions[..m] {
        anomalous[p] = true;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "trace-calls"));
    let alphabet = cfg.syscall_alphabet_size;
    let pattern_len = alphabet.min(8);
    let unusual_from = alphabet - alphabet / 2;

    let (lo, hi) = cfg.trace_length_range;
    let mut traces = Vec::with_capacity(n);
    for (i, &is_anomalous) in anomalous.iter().enumerate() {
        let len = rng.random_range(lo..=hi);
        let phase = rng.random_range(0..pattern_len);
        let mut calls: Vec<String> = (0..len)
            .map(|k| {
                if rng.random::<f64>() < TRACE_JITTER {
                    normal_call(rng.random_range(0..alphabet))
                } else {
                    normal_call((phase + k) % pattern_len)
                }
            })
            .collect();
        let mut burst = None;
        if is_anomalous {
            let blen = cfg.anomaly_burst_length.min(len);
            let usable = len - blen;
            let start = match cfg.burst_start_range {
                Some((a, b)) => {
                    let left = (a * usable as f64).round() as usize;
                    let right = (b * usable as f64).round() as usize;
                    rng.random_range(left..=right.max(left))
                }
                None => rng.random_range(0..=usable),
            };
            for c in calls.iter_mut().skip(start).take(blen) {
                *c = if cfg.disjoint_bursts {
                    anomalous_call(rng.random_range(0..alphabet))
                } else {
                    normal_call(rng.random_range(unusual_from..alphabet))
                };
            }
            burst = Some((start, start + blen));
        }
        traces.push(Trace {
            id: format!("t{i:05}"),
            calls,
            label: if is_anomalous { TraceLabel::Anomalous } else { TraceLabel::Normal },
            burst,
        });
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::{BTreeMap, BTreeSet};

    fn small_cfg() -> GeneratorConfig {
        GeneratorConfig {
            n_records: 4_000,
            drift_at: vec![],
            seed: 7,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn identical_seed_identical_stream() {
        let cfg = GeneratorConfig { seed: 7, n_records: 500, ..GeneratorConfig::default() };
        let a = generate_text_stream(&cfg).unwrap();
        let b = generate_text_stream(&cfg).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
    }

    #[test]
    fn class_ratio_matched_by_construction() {
        let cfg = GeneratorConfig { n_records: 10_000, class_ratio: 0.18, ..small_cfg() };
        let stream = generate_text_stream(&cfg).unwrap();
        let counts = stream.class_counts();
        assert_eq!(counts[LABEL_MALICIOUS], 1_800);
        assert_eq!(counts[LABEL_BENIGN], 8_200);
    }

    /// Frequency-count oracle: with no drift configured, per-class token
    /// distributions over the two time halves are homogeneous.
    #[test]
    fn no_drift_means_stationary_token_distribution() {
        let cfg = small_cfg();
        let stream = generate_text_stream(&cfg).unwrap();
        let mid = cfg.start_day + cfg.span_days / 2;
        for class in [LABEL_BENIGN, LABEL_MALICIOUS] {
            let mut first: BTreeMap<&str, f64> = BTreeMap::new();
            let mut second: BTreeMap<&str, f64> = BTreeMap::new();
            for r in stream.records() {
                if r.true_label.as_deref() != Some(class) {
                    continue;
                }
                let half = if r.timestamp < mid { &mut first } else { &mut second };
                for t in &r.tokens {
                    *half.entry(t.as_str()).or_insert(0.0) += 1.0;
                }
            }
            let bins: BTreeSet<&str> = first.keys().chain(second.keys()).copied().collect();
            let n1: f64 = first.values().sum();
            let n2: f64 = second.values().sum();
            let mut chi2 = 0.0;
            for b in &bins {
                let o1 = first.get(b).copied().unwrap_or(0.0);
                let o2 = second.get(b).copied().unwrap_or(0.0);
                let pooled = (o1 + o2) / (n1 + n2);
                let (e1, e2) = (pooled * n1, pooled * n2);
                chi2 += (o1 - e1).powi(2) / e1 + (o2 - e2).powi(2) / e2;
            }
            let df = (bins.len() - 1) as f64;
            let p = 1.0 - ChiSquared::new(df).unwrap().cdf(chi2);
            assert!(p > 0.01, "class {class}: chi2={chi2:.1} df={df} p={p:.4}");
        }
    }

    #[test]
    fn pure_swap_has_zero_vocabulary_overlap() {
        let cfg = GeneratorConfig {
            n_records: 2_000,
            drift_at: vec![180],
            noise: 0.0,
            ..GeneratorConfig::default()
        };
        let stream = generate_text_stream(&cfg).unwrap();
        let mut before = BTreeSet::new();
        let mut after = BTreeSet::new();
        for r in stream.records() {
            if r.true_label.as_deref() != Some(LABEL_MALICIOUS) {
                continue;
            }
            let side = if r.timestamp < 180 { &mut before } else { &mut after };
            side.extend(r.tokens.iter().cloned());
        }
        assert!(!before.is_empty() && !after.is_empty());
        assert!(before.is_disjoint(&after));
    }

    #[test]
    fn drift_points_validated() {
        let bad = GeneratorConfig { drift_at: vec![100, 100], ..GeneratorConfig::default() };
        assert!(bad.validate().is_err());
        let outside = GeneratorConfig { drift_at: vec![400], ..GeneratorConfig::default() };
        assert!(outside.validate().is_err());
        let ratio = GeneratorConfig { class_ratio: 1.5, ..GeneratorConfig::default() };
        assert!(ratio.validate().is_err());
    }

    #[test]
    fn zero_anomaly_ratio_means_all_normal() {
        let cfg = TraceConfig { anomaly_ratio: 0.0, n_traces: 50, ..TraceConfig::default() };
        let traces = generate_traces(&cfg).unwrap();
        assert!(traces.iter().all(|t| t.label == TraceLabel::Normal && t.burst.is_none()));
    }

    #[test]
    fn windows_overlapping_bursts_contain_out_of_alphabet_calls() {
        let cfg = TraceConfig { seed: 3, ..TraceConfig::default() };
        let traces = generate_traces(&cfg).unwrap();
        let w = 15;
        let mut seen_any = false;
        for t in &traces {
            let Some((bs, be)) = t.burst else { continue };
            seen_any = true;
            for start in 0..t.calls.len().saturating_sub(w - 1) {
                let end = start + w;
                if start < be && end > bs {
                    assert!(
                        t.calls[start..end].iter().any(|c| c.starts_with("an_")),
                        "window [{start},{end}) misses burst [{bs},{be}) in {}",
                        t.id
                    );
                }
            }
        }
        assert!(seen_any);
    }

    #[test]
    fn trace_generation_is_deterministic() {
        let cfg = TraceConfig { seed: 11, ..TraceConfig::default() };
        assert_eq!(generate_traces(&cfg).unwrap(), generate_traces(&cfg).unwrap());
    }

    #[test]
    fn burst_start_range_is_respected() {
        let cfg = TraceConfig {
            trace_length_range: (200, 200),
            anomaly_burst_length: 20,
            burst_start_range: Some((0.5, 0.9)),
            ..TraceConfig::default()
        };
        for t in generate_traces(&cfg).unwrap() {
            if let Some((bs, _)) = t.burst {
                assert!(bs >= 90, "burst at {bs} starts before half of the usable span");
            }
        }
    }
}
