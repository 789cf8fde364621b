//! Sparse feature vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Sparse nonnegative feature vector with a declared dimension.
///
/// Entries at unlisted indices are zero. Zero values are never stored, so
/// `nnz` is always the count of strictly positive entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<S: Scalar> {
    dim: usize,
    entries: BTreeMap<usize, S>,
}

impl<S: Scalar> FeatureVector<S> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, entries: BTreeMap::new() }
    }

    /// Build from (index, value) pairs, summing duplicates.
    ///
    /// Panics in debug builds on indices out of range, negative values, or
    /// non-finite values; release builds drop offending entries.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, S)>) -> Self {
        let mut v = Self::zeros(dim);
        for (i, x) in pairs {
            v.add(i, x);
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> S {
        self.entries.get(&index).copied().unwrap_or_else(S::zero)
    }

    /// Add `value` at `index` (values accumulate; zero results are pruned).
    pub fn add(&mut self, index: usize, value: S) {
        debug_assert!(index < self.dim, "index {index} out of dim {}", self.dim);
        debug_assert!(value.is_finite() && value >= S::zero(), "bad feature value {value}");
        if index >= self.dim || !value.is_finite() || value < S::zero() {
            return;
        }
        let slot = self.entries.entry(index).or_insert_with(S::zero);
        *slot += value;
        if slot.is_zero() {
            self.entries.remove(&index);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, S)> + '_ {
        self.entries.iter().map(|(&i, &v)| (i, v))
    }

    /// Sum of all entries (total feature mass).
    pub fn total_mass(&self) -> S {
        self.entries.values().copied().sum()
    }

    pub fn l2_norm(&self) -> S {
        self.entries.values().map(|&v| v * v).sum::<S>().sqrt()
    }

    /// Scale to unit L2 norm; the zero vector is left untouched.
    pub fn l2_normalize(&mut self) {
        let n = self.l2_norm();
        if n > S::zero() {
            for v in self.entries.values_mut() {
                *v /= n;
            }
        }
    }

    /// Squared Euclidean distance.
    pub fn sq_distance(&self, other: &Self) -> S {
        let mut acc = S::zero();
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (Some((&ia, &va)), Some((&ib, &vb))) => {
                    let d = match ia.cmp(&ib) {
                        std::cmp::Ordering::Less => {
                            a.next();
                            va
                        }
                        std::cmp::Ordering::Greater => {
                            b.next();
                            vb
                        }
                        std::cmp::Ordering::Equal => {
                            a.next();
                            b.next();
                            va - vb
                        }
                    };
                    acc += d * d;
                }
                (Some((_, &va)), None) => {
                    a.next();
                    acc += va * va;
                }
                (None, Some((_, &vb))) => {
                    b.next();
                    acc += vb * vb;
                }
                (None, None) => break,
            }
        }
        acc
    }

    /// Point on the segment from `a` to `b`: `a + u * (b - a)`.
    ///
    /// Both inputs must share a dimension; `u` is expected in [0, 1], which
    /// keeps every coordinate inside the parents' span (and nonnegative).
    pub fn lerp(a: &Self, b: &Self, u: S) -> Self {
        debug_assert_eq!(a.dim, b.dim);
        let mut out = Self::zeros(a.dim);
        for (i, va) in a.iter() {
            let vb = b.get(i);
            out.add(i, va + u * (vb - va));
        }
        for (i, vb) in b.iter() {
            if a.entries.contains_key(&i) {
                continue;
            }
            out.add(i, u * vb);
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct FeatureVectorRepr<S> {
    dim: usize,
    entries: Vec<(usize, S)>,
}

impl<S: Scalar> Serialize for FeatureVector<S> {
    fn serialize<Sz: serde::Serializer>(&self, ser: Sz) -> Result<Sz::Ok, Sz::Error> {
        FeatureVectorRepr { dim: self.dim, entries: self.iter().collect() }.serialize(ser)
    }
}

impl<'de, S: Scalar> Deserialize<'de> for FeatureVector<S> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let repr = FeatureVectorRepr::<S>::deserialize(de)?;
        Ok(Self::from_pairs(repr.dim, repr.entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulates_and_prunes_zeros() {
        let mut v: FeatureVector<f64> = FeatureVector::zeros(4);
        v.add(1, 2.0);
        v.add(1, 3.0);
        v.add(2, 0.0);
        assert_eq!(v.get(1), 5.0);
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.total_mass(), 5.0);
    }

    #[test]
    fn normalization_unit_or_zero() {
        let mut v = FeatureVector::from_pairs(2, [(0, 3.0f64), (1, 4.0)]);
        v.l2_normalize();
        assert!((v.l2_norm() - 1.0).abs() < 1e-9);
        let mut z: FeatureVector<f64> = FeatureVector::zeros(2);
        z.l2_normalize();
        assert!(z.is_zero());
    }

    #[test]
    fn sq_distance_merges_disjoint_support() {
        let a = FeatureVector::from_pairs(4, [(0, 1.0f64), (2, 2.0)]);
        let b = FeatureVector::from_pairs(4, [(1, 1.0f64), (2, 1.0)]);
        // (1-0)^2 + (0-1)^2 + (2-1)^2 = 3
        assert_eq!(a.sq_distance(&b), 3.0);
        assert_eq!(b.sq_distance(&a), 3.0);
    }

    #[test]
    fn lerp_lies_on_segment() {
        let a = FeatureVector::from_pairs(3, [(0, 1.0f64)]);
        let b = FeatureVector::from_pairs(3, [(0, 3.0f64), (1, 2.0)]);
        let m = FeatureVector::lerp(&a, &b, 0.5);
        assert_eq!(m.get(0), 2.0);
        assert_eq!(m.get(1), 1.0);
        let at_b = FeatureVector::lerp(&a, &b, 1.0);
        assert_eq!(at_b, b);
    }

    #[test]
    fn serde_round_trip() {
        let v = FeatureVector::from_pairs(8, [(1, 0.5f64), (7, 2.0)]);
        let s = serde_json::to_string(&v).unwrap();
        let back: FeatureVector<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(v, back);
    }
}
