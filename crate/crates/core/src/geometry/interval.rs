use std::fmt;

use crate::error::{Error, Result};

/// A closed interval `[lo, hi]` of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::Domain(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Caller guarantees `lo <= hi`.
    pub const fn of(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    /// Closed intervals sharing at least one point.
    pub fn meets(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Overlap of positive length.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A finite union of closed intervals, kept sorted, pairwise disjoint and
/// with touching pieces merged. Zero-length pieces are dropped, so all
/// operations are exact up to sets of measure zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet {
    intervals: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet::default()
    }

    pub fn unit() -> Self {
        IntervalSet {
            intervals: vec![Interval::UNIT],
        }
    }

    pub fn single(i: Interval) -> Self {
        Self::from_intervals(vec![i])
    }

    pub fn from_intervals(mut v: Vec<Interval>) -> Self {
        v.retain(|i| !i.is_degenerate());
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match out.last_mut() {
                Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
                _ => out.push(i),
            }
        }
        IntervalSet { intervals: out }
    }

    /// Wraps intervals already sorted and pairwise separated; checked in debug builds.
    pub(crate) fn from_sorted_disjoint(v: Vec<Interval>) -> Self {
        debug_assert!(v.windows(2).all(|w| w[0].hi < w[1].lo));
        debug_assert!(v.iter().all(|i| !i.is_degenerate()));
        IntervalSet { intervals: v }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.intervals.iter()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Sum of lengths, compensated so that sets with millions of pieces stay
    /// accurate to a few ulps.
    pub fn total_length(&self) -> f64 {
        neumaier_sum(self.intervals.iter().map(Interval::len))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    /// Index of the piece containing `t`.
    pub fn locate(&self, t: f64) -> Option<usize> {
        let k = self.intervals.partition_point(|i| i.hi < t);
        (k < self.intervals.len() && self.intervals[k].lo <= t).then_some(k)
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut v = self.intervals.clone();
        v.extend_from_slice(&other.intervals);
        IntervalSet::from_intervals(v)
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < a.len() && j < b.len() {
            if let Some(x) = a[i].intersect(&b[j]) {
                out.push(x);
            }
            if a[i].hi < b[j].hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Closure of `self \ other`.
    pub fn difference(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let b = &other.intervals;
        let mut j = 0;
        for a in &self.intervals {
            let mut lo = a.lo;
            while j < b.len() && b[j].hi <= lo {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].lo < a.hi {
                if b[k].lo > lo {
                    out.push(Interval::of(lo, b[k].lo));
                }
                lo = lo.max(b[k].hi);
                k += 1;
            }
            if lo < a.hi {
                out.push(Interval::of(lo, a.hi));
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Closure of `[0,1] \ self`.
    pub fn complement(&self) -> IntervalSet {
        IntervalSet::unit().difference(self)
    }

    /// Total length of `self ∩ window`.
    pub fn length_within(&self, window: &IntervalSet) -> f64 {
        self.intersection(window).total_length()
    }

    /// Pieces of length at least `min_len`, as a new set.
    pub fn without_slivers(&self, min_len: f64) -> IntervalSet {
        IntervalSet {
            intervals: self
                .intervals
                .iter()
                .copied()
                .filter(|i| i.len() >= min_len)
                .collect(),
        }
    }

    pub fn is_subset_of(&self, other: &IntervalSet) -> bool {
        self.difference(other).is_empty()
    }

    /// `lo,hi` CSV rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi\n");
        for i in &self.intervals {
            s.push_str(&format!("{:.16e},{:.16e}\n", i.lo, i.hi));
        }
        s
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        IntervalSet::from_intervals(iter.into_iter().collect())
    }
}

pub(crate) fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[(f64, f64)]) -> IntervalSet {
        v.iter().map(|&(a, b)| Interval::of(a, b)).collect()
    }

    #[test]
    fn touching_union_merges() {
        let u = set(&[(0.0, 0.3)]).union(&set(&[(0.3, 0.5)]));
        assert_eq!(u, set(&[(0.0, 0.5)]));
        assert_eq!(u.len(), 1);
    }

    #[test]
    fn difference_of_middle_piece() {
        let d = IntervalSet::unit().difference(&set(&[(0.35, 0.65)]));
        assert_eq!(d, set(&[(0.0, 0.35), (0.65, 1.0)]));
        assert!((d.total_length() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn intersection_overlap() {
        let i = set(&[(0.0, 0.5)]).intersection(&set(&[(0.4, 1.0)]));
        assert_eq!(i, set(&[(0.4, 0.5)]));
    }

    #[test]
    fn complement_and_locate() {
        let a = set(&[(0.1, 0.2), (0.5, 0.6)]);
        assert_eq!(a.complement(), set(&[(0.0, 0.1), (0.2, 0.5), (0.6, 1.0)]));
        assert_eq!(a.locate(0.2), Some(0));
        assert_eq!(a.locate(0.3), None);
        assert_eq!(a.locate(0.5), Some(1));
        assert!(IntervalSet::empty().complement() == IntervalSet::unit());
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(Interval::new(0.5, 0.4).is_err());
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0.0f64..1.0, 0.0f64..0.2), 0..12).prop_map(|v| {
            v.into_iter()
                .map(|(a, w)| Interval::of(a, (a + w).min(1.0)))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
            let lhs = a.union(&b).total_length() + a.intersection(&b).total_length();
            let rhs = a.total_length() + b.total_length();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn difference_partitions(a in arb_set(), b in arb_set()) {
            let d = a.difference(&b).total_length();
            let i = a.intersection(&b).total_length();
            prop_assert!((d + i - a.total_length()).abs() < 1e-12);
            prop_assert!(a.difference(&b).intersection(&b).total_length() < 1e-15);
        }

        #[test]
        fn normalized_output(a in arb_set(), b in arb_set()) {
            for s in [a.union(&b), a.intersection(&b), a.difference(&b), a.complement()] {
                prop_assert!(s.intervals().windows(2).all(|w| w[0].hi < w[1].lo));
            }
        }
    }
}
