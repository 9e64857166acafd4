use std::collections::BTreeMap;

use super::vector::{check_finite, NormTag, Scalar};
use crate::error::Result;

/// Entries with modulus below this are dropped on canonicalization (denormal guard).
pub const DENORMAL_FLOOR: f64 = 1e-300;

/// A finitely supported bilateral sequence `(xi_k)_{k in Z}`.
///
/// The canonical form stores no zero entries, so two sequences are equal
/// exactly when their maps are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBiSeq {
    entries: BTreeMap<i64, Scalar>,
    norm_tag: NormTag,
}

impl SparseBiSeq {
    pub fn zero(norm_tag: NormTag) -> Self {
        Self { entries: BTreeMap::new(), norm_tag }
    }

    pub fn unit(k: i64, norm_tag: NormTag) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert(k, Scalar::new(1.0, 0.0));
        Self { entries, norm_tag }
    }

    pub fn from_entries<I: IntoIterator<Item = (i64, Scalar)>>(
        entries: I,
        norm_tag: NormTag,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (k, z) in entries {
            check_finite(z, "sequence entry")?;
            *map.entry(k).or_insert(Scalar::new(0.0, 0.0)) += z;
        }
        Ok(Self::canonical(map, norm_tag))
    }

    pub fn from_real<I: IntoIterator<Item = (i64, f64)>>(entries: I, norm_tag: NormTag) -> Result<Self> {
        Self::from_entries(entries.into_iter().map(|(k, x)| (k, Scalar::new(x, 0.0))), norm_tag)
    }

    pub(crate) fn canonical(mut entries: BTreeMap<i64, Scalar>, norm_tag: NormTag) -> Self {
        entries.retain(|_, z| z.norm() >= DENORMAL_FLOOR);
        Self { entries, norm_tag }
    }

    pub fn norm_tag(&self) -> NormTag {
        self.norm_tag
    }

    pub fn with_norm_tag(mut self, tag: NormTag) -> Self {
        self.norm_tag = tag;
        self
    }

    pub fn get(&self, k: i64) -> Scalar {
        self.entries.get(&k).copied().unwrap_or(Scalar::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Scalar)> + '_ {
        self.entries.iter().map(|(k, z)| (*k, *z))
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest and largest index of the support.
    pub fn support_bounds(&self) -> Option<(i64, i64)> {
        let lo = *self.entries.keys().next()?;
        let hi = *self.entries.keys().next_back()?;
        Some((lo, hi))
    }

    pub fn norm(&self) -> f64 {
        self.norm_tag.of(self.entries.values())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.norm_tag.ensure_same(other.norm_tag)?;
        let mut map = self.entries.clone();
        for (k, z) in &other.entries {
            *map.entry(*k).or_insert(Scalar::new(0.0, 0.0)) += z;
        }
        Ok(Self::canonical(map, self.norm_tag))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Scalar::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Scalar) -> Self {
        Self::canonical(self.entries.iter().map(|(k, z)| (*k, z * s)).collect(), self.norm_tag)
    }

    /// Keep the entries whose index satisfies `keep`.
    pub fn restrict<F: Fn(i64) -> bool>(&self, keep: F) -> Self {
        Self {
            entries: self.entries.iter().filter(|(k, _)| keep(**k)).map(|(k, z)| (*k, *z)).collect(),
            norm_tag: self.norm_tag,
        }
    }

    /// Rebuild entry by entry; `f` returns the new index and value, or `None` to drop the entry.
    pub(crate) fn map_entries<F>(&self, mut f: F) -> Self
    where
        F: FnMut(i64, Scalar) -> Option<(i64, Scalar)>,
    {
        let mut map = BTreeMap::new();
        for (k, z) in &self.entries {
            if let Some((j, w)) = f(*k, *z) {
                *map.entry(j).or_insert(Scalar::new(0.0, 0.0)) += w;
            }
        }
        Self::canonical(map, self.norm_tag)
    }
}
