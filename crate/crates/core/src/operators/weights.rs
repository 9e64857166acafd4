//! Weight rules and the weighted-shift normal form `(L xi)_k = w(k) xi_{k+s}`.

use std::collections::BTreeMap;

use crate::linalg::{Scalar, SparseBiSeq};

const ZERO: Scalar = Scalar::new(0.0, 0.0);
const ONE: Scalar = Scalar::new(1.0, 0.0);

/// Closed description of an index-to-scalar weight function.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// `neg_and_zero` for `k <= 0`, `pos` for `k > 0`.
    SignSplit { neg_and_zero: Scalar, pos: Scalar },
    /// Explicit finite table, `default` elsewhere.
    Table { entries: BTreeMap<i64, Scalar>, default: Scalar },
}

impl WeightRule {
    pub fn sign_split(neg_and_zero: f64, pos: f64) -> Self {
        WeightRule::SignSplit { neg_and_zero: Scalar::new(neg_and_zero, 0.0), pos: Scalar::new(pos, 0.0) }
    }

    pub fn constant(c: Scalar) -> Self {
        WeightRule::Table { entries: BTreeMap::new(), default: c }
    }

    pub fn eval(&self, k: i64) -> Scalar {
        match self {
            WeightRule::SignSplit { neg_and_zero, pos } => {
                if k <= 0 {
                    *neg_and_zero
                } else {
                    *pos
                }
            }
            WeightRule::Table { entries, default } => entries.get(&k).copied().unwrap_or(*default),
        }
    }

    pub(crate) fn to_weight(&self) -> Weight {
        match self {
            WeightRule::SignSplit { neg_and_zero, pos } => {
                Weight { lo: 1, below: *neg_and_zero, mid: Vec::new(), above: *pos }
            }
            WeightRule::Table { entries, default } => {
                let (Some(lo), Some(hi)) = (entries.keys().next(), entries.keys().next_back()) else {
                    return Weight::constant(*default);
                };
                let mid = (*lo..=*hi).map(|k| entries.get(&k).copied().unwrap_or(*default)).collect();
                Weight { lo: *lo, below: *default, mid, above: *default }.compact()
            }
        }
    }
}

/// A set of consecutive integers `[lo, hi]`; `None` ends are infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexRange {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl IndexRange {
    pub const ALL: IndexRange = IndexRange { lo: None, hi: None };

    pub fn at_most(c: i64) -> Self {
        IndexRange { lo: None, hi: Some(c) }
    }

    pub fn above(c: i64) -> Self {
        IndexRange { lo: Some(c + 1), hi: None }
    }

    pub fn between(lo: i64, hi: i64) -> Self {
        IndexRange { lo: Some(lo), hi: Some(hi) }
    }

    pub fn empty() -> Self {
        IndexRange { lo: Some(1), hi: Some(0) }
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(a), Some(b)) if a > b)
    }

    pub fn contains(&self, k: i64) -> bool {
        self.lo.is_none_or(|a| k >= a) && self.hi.is_none_or(|b| k <= b)
    }

    pub fn shifted(&self, by: i64) -> Self {
        IndexRange { lo: self.lo.map(|a| a + by), hi: self.hi.map(|b| b + by) }
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        IndexRange { lo, hi }
    }

    /// Complement, as an interval; defined when `self` is a half-line, all or empty.
    pub fn complement(&self) -> Option<Self> {
        if self.is_empty() {
            return Some(Self::ALL);
        }
        match (self.lo, self.hi) {
            (None, None) => Some(Self::empty()),
            (None, Some(c)) => Some(Self::above(c)),
            (Some(a), None) => Some(Self::at_most(a - 1)),
            _ => None,
        }
    }
}

/// Piecewise weight: `below` for `k < lo`, `mid[k - lo]` on the table, `above` past it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Weight {
    lo: i64,
    below: Scalar,
    mid: Vec<Scalar>,
    above: Scalar,
}

impl Weight {
    pub fn constant(c: Scalar) -> Self {
        Weight { lo: 0, below: c, mid: Vec::new(), above: c }
    }

    /// `c` on `k >= start`, zero below.
    pub fn one_sided(c: Scalar, start: i64) -> Self {
        Weight { lo: start, below: ZERO, mid: Vec::new(), above: c }
    }

    fn hi(&self) -> i64 {
        self.lo + self.mid.len() as i64
    }

    pub fn eval(&self, k: i64) -> Scalar {
        if k < self.lo {
            self.below
        } else if k >= self.hi() {
            self.above
        } else {
            self.mid[(k - self.lo) as usize]
        }
    }

    fn compact(mut self) -> Self {
        let lead = self.mid.iter().take_while(|z| **z == self.below).count();
        self.mid.drain(..lead);
        self.lo += lead as i64;
        while self.mid.last() == Some(&self.above) {
            self.mid.pop();
        }
        self
    }

    /// `k -> self(k) * other(k + shift)`.
    pub fn product_shifted(&self, other: &Weight, shift: i64) -> Weight {
        let lo = self.lo.min(other.lo - shift);
        let hi = self.hi().max(other.hi() - shift);
        let mid = (lo..hi).map(|k| self.eval(k) * other.eval(k + shift)).collect();
        Weight { lo, below: self.below * other.below, mid, above: self.above * other.above }.compact()
    }

    /// `k -> 1 / self(k - shift)`; `None` if some weight vanishes.
    pub fn reciprocal_shifted(&self, shift: i64) -> Option<Weight> {
        if self.below == ZERO || self.above == ZERO || self.mid.contains(&ZERO) {
            return None;
        }
        Some(Weight {
            lo: self.lo + shift,
            below: ONE / self.below,
            mid: self.mid.iter().map(|z| ONE / z).collect(),
            above: ONE / self.above,
        })
    }

    fn fold_on(&self, range: &IndexRange, init: f64, f: fn(f64, f64) -> f64) -> f64 {
        if range.is_empty() {
            return init;
        }
        let mut acc = init;
        if range.lo.is_none_or(|a| a < self.lo) {
            acc = f(acc, self.below.norm());
        }
        if range.hi.is_none_or(|b| b >= self.hi()) {
            acc = f(acc, self.above.norm());
        }
        for (i, z) in self.mid.iter().enumerate() {
            if range.contains(self.lo + i as i64) {
                acc = f(acc, z.norm());
            }
        }
        acc
    }

    pub fn sup_abs_on(&self, range: &IndexRange) -> f64 {
        self.fold_on(range, 0.0, f64::max)
    }

    pub fn inf_abs_on(&self, range: &IndexRange) -> f64 {
        self.fold_on(range, f64::INFINITY, f64::min)
    }
}

/// Normal form `(L xi)_k = w(k) xi_{k+offset}` shared by all sequence operators.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct WeightedShift {
    pub offset: i64,
    pub weight: Weight,
}

impl WeightedShift {
    pub fn identity() -> Self {
        WeightedShift { offset: 0, weight: Weight::constant(ONE) }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &WeightedShift) -> WeightedShift {
        WeightedShift {
            offset: self.offset + other.offset,
            weight: self.weight.product_shifted(&other.weight, self.offset),
        }
    }

    pub fn inverse(&self) -> Option<WeightedShift> {
        Some(WeightedShift { offset: -self.offset, weight: self.weight.reciprocal_shifted(self.offset)? })
    }

    pub fn power(&self, n: u32) -> WeightedShift {
        let mut acc = WeightedShift::identity();
        let mut base = self.clone();
        let mut n = n;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.compose(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.compose(&base);
            }
        }
        acc
    }

    /// Basis vector `e_j` goes to `w(j - offset) e_{j - offset}`.
    pub fn apply(&self, v: &SparseBiSeq) -> SparseBiSeq {
        v.map_entries(|j, z| {
            let k = j - self.offset;
            Some((k, self.weight.eval(k) * z))
        })
    }

    /// Exact norm of the restriction to sequences supported in `domain`.
    ///
    /// Distinct basis vectors go to multiples of distinct basis vectors, so every
    /// l^p operator norm equals the largest weight met by the domain.
    pub fn norm_on(&self, domain: &IndexRange) -> f64 {
        self.weight.sup_abs_on(&domain.shifted(-self.offset))
    }

    /// Whether the image of sequences supported in `domain` is supported in `target`.
    pub fn maps_into(&self, domain: &IndexRange, target: &IndexRange) -> bool {
        let image = domain.shifted(-self.offset);
        match target.complement() {
            Some(outside) => self.weight.sup_abs_on(&image.intersect(&outside)) == 0.0,
            None => {
                // bounded target: the image of an unbounded domain must vanish off it
                let left = IndexRange { lo: None, hi: target.lo.map(|a| a - 1) };
                let right = IndexRange { lo: target.hi.map(|b| b + 1), hi: None };
                self.weight.sup_abs_on(&image.intersect(&left)) == 0.0
                    && self.weight.sup_abs_on(&image.intersect(&right)) == 0.0
            }
        }
    }
}
