//! Textual feature extraction with an explicit fit/transform lifecycle.
//!
//! Two extractor families:
//!
//! - [`VocabFeaturizer`]: bag-of-words counts or TF-IDF over a vocabulary
//!   fitted on a corpus. Out-of-vocabulary tokens are silently dropped — the
//!   failure mode a drift-aware pipeline exists to repair, so it must stay
//!   observable rather than error out.
//! - [`HashFeaturizer`]: the stateless hashing trick. FNV-1a 64 over the
//!   token's UTF-8 bytes, index = hash mod dim, is normative so every
//!   implementation produces identical vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::scalar::Scalar;
use crate::stream::StreamRecord;

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

/// Output weighting of a vocabulary featurizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VectorMode {
    Counts,
    TfIdf,
}

/// Configuration for [`VocabFeaturizer::fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct VocabConfig {
    /// Minimum document frequency for a token to enter the vocabulary.
    pub min_freq: u32,
    pub mode: VectorMode,
    /// L2-normalize output vectors. `None` picks the mode default:
    /// on for tf-idf, off for counts.
    pub normalize: Option<bool>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self { min_freq: 1, mode: VectorMode::TfIdf, normalize: None }
    }
}

impl VocabConfig {
    pub fn counts() -> Self {
        Self { mode: VectorMode::Counts, ..Self::default() }
    }

    pub fn tfidf() -> Self {
        Self::default()
    }

    fn normalize_effective(&self) -> bool {
        self.normalize.unwrap_or(self.mode == VectorMode::TfIdf)
    }
}

/// Fitted vocabulary featurizer state.
///
/// Vocabulary indices follow first-seen order over the fit corpus, which
/// keeps refits on the same corpus bit-identical. Serializes to JSON for
/// experiment resumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabFeaturizer {
    vocabulary: BTreeMap<String, usize>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    config: VocabConfig,
}

impl VocabFeaturizer {
    /// Fit on a corpus: vocabulary = tokens with document frequency >=
    /// `min_freq`, indexed in first-seen order.
    pub fn fit(config: VocabConfig, corpus: &[StreamRecord]) -> Result<Self> {
        Self::fit_token_lists(config, corpus.iter().map(|r| r.tokens.as_slice()))
    }

    /// Fit on raw token lists (used for trace windows and tests).
    pub fn fit_token_lists<'a>(
        config: VocabConfig,
        docs: impl IntoIterator<Item = &'a [String]>,
    ) -> Result<Self> {
        let mut first_seen: Vec<String> = Vec::new();
        let mut df: BTreeMap<String, u32> = BTreeMap::new();
        let mut n_docs = 0usize;
        for tokens in docs {
            n_docs += 1;
            let mut in_doc = std::collections::BTreeSet::new();
            for t in tokens {
                if in_doc.insert(t.as_str()) {
                    let e = df.entry(t.clone()).or_insert(0);
                    if *e == 0 {
                        first_seen.push(t.clone());
                    }
                    *e += 1;
                }
            }
        }
        if n_docs == 0 {
            return Err(Error::EmptyCorpus);
        }
        let mut vocabulary = BTreeMap::new();
        let mut doc_freq = Vec::new();
        for token in first_seen {
            let f = df[&token];
            if f >= config.min_freq {
                vocabulary.insert(token, doc_freq.len());
                doc_freq.push(f);
            }
        }
        if vocabulary.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Self { vocabulary, doc_freq, n_docs, config })
    }

    pub fn dim(&self) -> usize {
        self.doc_freq.len()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocabulary.get(token).copied()
    }

    pub fn doc_freq_of(&self, token: &str) -> Option<u32> {
        self.index_of(token).map(|i| self.doc_freq[i])
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vocabulary.contains_key(token)
    }

    /// Smoothed inverse document frequency: `ln((1+N)/(1+df)) + 1`.
    fn idf<S: Scalar>(&self, index: usize) -> S {
        let n = S::from_count(self.n_docs + 1);
        let d = S::from_count(self.doc_freq[index] as usize + 1);
        (n / d).ln() + S::one()
    }

    pub fn transform<S: Scalar>(&self, record: &StreamRecord) -> FeatureVector<S> {
        self.transform_tokens(&record.tokens)
    }

    /// Pure function of (state, tokens): unknown tokens are dropped.
    pub fn transform_tokens<S: Scalar>(&self, tokens: &[String]) -> FeatureVector<S> {
        let mut v = FeatureVector::zeros(self.dim());
        for t in tokens {
            if let Some(&i) = self.vocabulary.get(t) {
                v.add(i, S::one());
            }
        }
        if self.config.mode == VectorMode::TfIdf {
            let weights: Vec<(usize, S)> = v.iter().map(|(i, tf)| (i, tf * self.idf::<S>(i))).collect();
            v = FeatureVector::from_pairs(self.dim(), weights);
        }
        if self.config.normalize_effective() {
            v.l2_normalize();
        }
        v
    }

    /// Fraction of tokens in `tokens` that fall outside the vocabulary.
    pub fn oov_rate(&self, tokens: &[String]) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        let oov = tokens.iter().filter(|t| !self.contains(t)).count();
        oov as f64 / tokens.len() as f64
    }
}

/// Configuration of the stateless hashing-trick featurizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(default)]
pub struct HashConfig {
    /// Output dimension; must be a power of two.
    pub dim: usize,
}

impl Default for HashConfig {
    fn default() -> Self {
        Self { dim: 1 << 18 }
    }
}

impl HashConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !self.dim.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("hashing dim {} must be a power of two", self.dim)));
        }
        Ok(())
    }
}

/// Stateless featurizer: `index(token) = fnv1a64(token) mod dim`, one unit
/// of mass per token occurrence. Collisions merge buckets, so total feature
/// mass always equals the token count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashFeaturizer {
    config: HashConfig,
}

impl HashFeaturizer {
    pub fn new(config: HashConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn index(&self, token: &str) -> usize {
        (fnv1a64(token.as_bytes()) % self.config.dim as u64) as usize
    }

    pub fn transform<S: Scalar>(&self, record: &StreamRecord) -> FeatureVector<S> {
        self.transform_tokens(&record.tokens)
    }

    pub fn transform_tokens<S: Scalar>(&self, tokens: &[String]) -> FeatureVector<S> {
        let mut v = FeatureVector::zeros(self.config.dim);
        for t in tokens {
            v.add(self.index(t), S::one());
        }
        v
    }
}

/// Extractor abstraction used by the stream pipeline: an extractor can be
/// refitted on raw records and transforms one record at a time.
pub trait Featurizer<S: Scalar>: Send {
    /// Refit on a fresh corpus. Stateless extractors ignore the corpus.
    fn refit(&mut self, corpus: &[StreamRecord]) -> Result<()>;
    fn transform(&self, record: &StreamRecord) -> FeatureVector<S>;
    fn dim(&self) -> usize;
    /// Stateless extractors never need a refit on drift.
    fn is_stateless(&self) -> bool;
}

/// A [`VocabFeaturizer`] behind the pipeline trait, remembering its config
/// so a refit reproduces the fit procedure.
#[derive(Debug, Clone)]
pub struct VocabExtractor {
    pub state: VocabFeaturizer,
}

impl VocabExtractor {
    pub fn fit(config: VocabConfig, corpus: &[StreamRecord]) -> Result<Self> {
        Ok(Self { state: VocabFeaturizer::fit(config, corpus)? })
    }
}

impl<S: Scalar> Featurizer<S> for VocabExtractor {
    fn refit(&mut self, corpus: &[StreamRecord]) -> Result<()> {
        self.state = VocabFeaturizer::fit(self.state.config, corpus)?;
        Ok(())
    }

    fn transform(&self, record: &StreamRecord) -> FeatureVector<S> {
        self.state.transform(record)
    }

    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn is_stateless(&self) -> bool {
        false
    }
}

impl<S: Scalar> Featurizer<S> for HashFeaturizer {
    fn refit(&mut self, _corpus: &[StreamRecord]) -> Result<()> {
        Ok(())
    }

    fn transform(&self, record: &StreamRecord) -> FeatureVector<S> {
        HashFeaturizer::transform(self, record)
    }

    fn dim(&self) -> usize {
        HashFeaturizer::dim(self)
    }

    fn is_stateless(&self) -> bool {
        true
    }
}
