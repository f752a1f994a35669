//! Cantor-type constructions on `[0, 1]`.
//!
//! Level `k` removes an open middle interval from each of the `2^{k-1}`
//! surviving closed intervals of level `k - 1`. The fat construction removes
//! pieces of length `mu^k`; the ternary construction removes middle thirds.
//! Children of a surviving interval `[a, b]` are always computed as
//! `[a, a + len_k]` and `[b - len_k, b]`, both when enumerating and when
//! descending to a point, so the two paths agree bit for bit. Endpoints
//! are carried in double-double precision and rounded once.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Interval, IntervalSet};

/// Removal ratio and truncation depth of a fat Cantor set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSpec {
    pub mu: f64,
    pub depth: usize,
}

impl CantorSpec {
    pub fn new(mu: f64, depth: usize) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0 / 3.0) {
            return Err(Error::Parameter(format!(
                "removal ratio mu = {mu} must lie in (0, 1/3)"
            )));
        }
        if depth == 0 {
            return Err(Error::Parameter("depth must be positive".into()));
        }
        Ok(CantorSpec { mu, depth })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CantorKind {
    Fat { mu: f64 },
    Ternary,
}

/// A gap of the construction seen from a query point, or an exterior ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
}

impl Gap {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
}

/// The surviving interval containing a point at some level, with the gaps
/// bordering it and the gap removed from its middle at the next level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelCell {
    pub level: usize,
    pub interval: Interval,
    pub left_gap: Gap,
    pub right_gap: Gap,
    pub middle_gap: Option<Gap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorConstruction {
    kind: CantorKind,
    depth: usize,
    /// `lengths[k]` is the length of each surviving interval at level `k`.
    lengths: Vec<f64>,
}

impl CantorConstruction {
    /// Fat Cantor set of a validated spec.
    pub fn fat(spec: CantorSpec) -> Result<Self> {
        Self::with_ratio(spec.mu, spec.depth)
    }

    /// Fat-type construction for any ratio in `(0, 1)`; fails at the first
    /// level whose removed piece does not fit.
    pub fn with_ratio(mu: f64, depth: usize) -> Result<Self> {
        if !(mu > 0.0 && mu < 1.0) {
            return Err(Error::Parameter(format!("removal ratio {mu} outside (0, 1)")));
        }
        let mut lengths = vec![1.0];
        let mut removed = 1.0;
        for level in 1..=depth {
            removed *= mu;
            let available = lengths[level - 1];
            if removed >= available {
                return Err(Error::Infeasible {
                    level,
                    removed,
                    available,
                });
            }
            lengths.push(0.5 * (available - removed));
        }
        Ok(CantorConstruction {
            kind: CantorKind::Fat { mu },
            depth,
            lengths,
        })
    }

    pub fn ternary(depth: usize) -> Self {
        let mut lengths = vec![1.0];
        for k in 1..=depth {
            lengths.push(lengths[k - 1] / 3.0);
        }
        CantorConstruction {
            kind: CantorKind::Ternary,
            depth,
            lengths,
        }
    }

    pub fn kind(&self) -> CantorKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Removal ratio (1/3 for the ternary set).
    pub fn mu(&self) -> f64 {
        match self.kind {
            CantorKind::Fat { mu } => mu,
            CantorKind::Ternary => 1.0 / 3.0,
        }
    }

    pub fn surviving_length(&self, level: usize) -> f64 {
        self.lengths[level]
    }

    /// Nominal length of each gap removed at `level ≥ 1`.
    pub fn gap_length(&self, level: usize) -> f64 {
        self.lengths[level - 1] - 2.0 * self.lengths[level]
    }

    /// The level-`level` truncation as an interval set (`2^level` pieces).
    pub fn intervals(&self, level: usize) -> IntervalSet {
        assert!(level <= self.depth);
        let mut cells = vec![Cell::UNIT];
        for k in 1..=level {
            let len = self.lengths[k];
            cells = cells
                .iter()
                .flat_map(|c| {
                    let (l, r) = c.children(len);
                    [l, r]
                })
                .collect();
        }
        let cur: Vec<Interval> = cells.iter().map(Cell::interval).collect();
        // Gaps far below the spacing of doubles can round away; merging the
        // touching pieces is then exact in floating point.
        if cur.windows(2).all(|w| w[0].hi < w[1].lo) {
            IntervalSet::from_sorted_disjoint(cur)
        } else {
            IntervalSet::from_intervals(cur)
        }
    }

    pub fn truncated_set(&self) -> IntervalSet {
        self.intervals(self.depth)
    }

    /// `1 - Σ_{k ≤ D} 2^{k-1} mu^k`, summed in closed form per level.
    pub fn partial_sum_measure(&self) -> f64 {
        let mu = self.mu();
        let mut removed = 0.0;
        let mut term = mu;
        for _ in 1..=self.depth {
            removed += term;
            term *= 2.0 * mu;
        }
        1.0 - removed
    }

    /// Measure of the limit set, `(1 - 3 mu) / (1 - 2 mu)`.
    pub fn limit_measure(&self) -> f64 {
        let mu = self.mu();
        (1.0 - 3.0 * mu) / (1.0 - 2.0 * mu)
    }

    /// `Σ_{k > D} 2^{k-1} mu^k = 2^D mu^{D+1} / (1 - 2 mu)`: the measure
    /// separating the truncation from the limit set.
    pub fn tail_bound(&self) -> f64 {
        let mu = self.mu();
        2f64.powi(self.depth as i32) * mu.powi(self.depth as i32 + 1) / (1.0 - 2.0 * mu)
    }

    /// Descends to `level`, returning the surviving cell containing `x`, or
    /// `None` if `x` falls into a gap on the way down.
    pub fn locate(&self, x: f64, level: usize) -> Option<LevelCell> {
        let level = level.min(self.depth);
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        let mut cell = Cell::UNIT;
        let mut left = Gap {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
        };
        let mut right = Gap {
            lo: 1.0,
            hi: f64::INFINITY,
        };
        for k in 1..=level {
            let (l, r) = cell.children(self.lengths[k]);
            let (li, ri) = (l.interval(), r.interval());
            let middle = Gap { lo: li.hi, hi: ri.lo };
            if li.contains(x) {
                right = middle;
                cell = l;
            } else if ri.contains(x) {
                left = middle;
                cell = r;
            } else {
                return None;
            }
        }
        let middle_gap = (level < self.depth).then(|| {
            let (l, r) = cell.children(self.lengths[level + 1]);
            Gap {
                lo: l.interval().hi,
                hi: r.interval().lo,
            }
        });
        Some(LevelCell {
            level,
            interval: cell.interval(),
            left_gap: left,
            right_gap: right,
            middle_gap,
        })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.locate(x, self.depth).is_some()
    }

    /// Distance from `x` to the truncated set (0 inside). Endpoints of a
    /// surviving interval survive at every later level, so the nearest set
    /// points are the ends of the gap that swallowed `x`.
    pub fn distance(&self, x: f64) -> f64 {
        if x < 0.0 {
            return -x;
        }
        if x > 1.0 {
            return x - 1.0;
        }
        let mut cell = Cell::UNIT;
        for k in 1..=self.depth {
            let (lc, rc) = cell.children(self.lengths[k]);
            let (l, r) = (lc.interval().hi, rc.interval().lo);
            if x <= l {
                cell = lc;
            } else if x >= r {
                cell = rc;
            } else {
                return (x - l).min(r - x);
            }
        }
        0.0
    }

    /// Uniform point of a uniformly chosen depth-`D` piece.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> f64 {
        let mut cell = Cell::UNIT;
        for k in 1..=self.depth {
            let (l, r) = cell.children(self.lengths[k]);
            cell = if rng.gen::<bool>() { l } else { r };
        }
        let i = cell.interval();
        rng.gen_range(i.lo..=i.hi)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const fn exact(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, b: f64) -> Self {
        let s = self.hi + b;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (b - bb);
        let t = err + self.lo;
        let hi = s + t;
        Dd {
            hi,
            lo: t - (hi - s),
        }
    }
}

/// A surviving interval with extended-precision endpoints.
#[derive(Debug, Clone, Copy)]
struct Cell {
    lo: Dd,
    hi: Dd,
}

impl Cell {
    const UNIT: Cell = Cell {
        lo: Dd::exact(0.0),
        hi: Dd::exact(1.0),
    };

    fn children(&self, len: f64) -> (Cell, Cell) {
        (
            Cell {
                lo: self.lo,
                hi: self.lo.add(len),
            },
            Cell {
                lo: self.hi.add(-len),
                hi: self.hi,
            },
        )
    }

    fn interval(&self) -> Interval {
        Interval::of(self.lo.hi, self.hi.hi)
    }
}

pub(crate) fn distance_to_set(set: &IntervalSet, x: f64) -> f64 {
    let v = set.intervals();
    if v.is_empty() {
        return f64::INFINITY;
    }
    let k = v.partition_point(|i| i.hi < x);
    let mut best = f64::INFINITY;
    if k < v.len() {
        best = best.min((v[k].lo - x).max(0.0));
    }
    if k > 0 {
        best = best.min(x - v[k - 1].hi);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration of endpoints, building each level from the
    /// closed-form removed length `mu^k` instead of the stored lengths.
    fn brute_force(mu: f64, depth: usize) -> Vec<(f64, f64)> {
        let mut cur = vec![(0.0f64, 1.0f64)];
        for k in 1..=depth {
            let gap = mu.powi(k as i32);
            cur = cur
                .into_iter()
                .flat_map(|(a, b)| {
                    let m = 0.5 * (a + b);
                    [(a, m - gap / 2.0), (m + gap / 2.0, b)]
                })
                .collect();
        }
        cur
    }

    #[test]
    fn first_level() {
        let c = CantorConstruction::fat(CantorSpec::new(0.3, 1).unwrap()).unwrap();
        let s = c.truncated_set();
        assert_eq!(s.len(), 2);
        assert!((s.intervals()[0].hi - 0.35).abs() < 1e-15);
        assert!((s.intervals()[1].lo - 0.65).abs() < 1e-15);
        assert!((s.total_length() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn second_level_matches_enumeration() {
        let c = CantorConstruction::fat(CantorSpec::new(0.3, 2).unwrap()).unwrap();
        let s = c.truncated_set();
        assert_eq!(s.len(), 4);
        assert!((s.total_length() - 0.52).abs() < 1e-15);
        for (i, (a, b)) in s.intervals().iter().zip(brute_force(0.3, 2)) {
            assert!((i.lo - a).abs() < 1e-15 && (i.hi - b).abs() < 1e-15);
        }
        assert!((s.intervals()[0].hi - 0.13).abs() < 1e-15);
    }

    #[test]
    fn limit_measure_at_point_three() {
        let c = CantorConstruction::fat(CantorSpec::new(0.3, 30).unwrap()).unwrap();
        assert!((c.limit_measure() - 0.25).abs() < 1e-15);
        assert!((c.partial_sum_measure() - c.tail_bound() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn spec_validation() {
        assert!(CantorSpec::new(1.0 / 3.0, 3).is_err());
        assert!(CantorSpec::new(0.0, 3).is_err());
        assert!(CantorSpec::new(0.2, 0).is_err());
        match CantorConstruction::with_ratio(0.4, 5) {
            Err(Error::Infeasible { level, .. }) => assert_eq!(level, 4),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn measure_matches_partial_sums() {
        for mu in [0.05, 0.1, 0.2, 0.3 - 1e-6] {
            for depth in [1, 5, 12, 18, 22] {
                let c = CantorConstruction::fat(CantorSpec::new(mu, depth).unwrap()).unwrap();
                let m = c.truncated_set().total_length();
                let tol = 1e-12;
                let diff = m - c.partial_sum_measure();
                assert!(diff.abs() < tol, "mu={mu} D={depth} diff={diff:e}");
            }
        }
    }

    #[test]
    fn nested_truncations() {
        let c = CantorConstruction::fat(CantorSpec::new(0.25, 9).unwrap()).unwrap();
        for d in 0..9 {
            assert!(c.intervals(d + 1).is_subset_of(&c.intervals(d)));
        }
    }

    #[test]
    fn locate_agrees_with_enumeration() {
        let c = CantorConstruction::fat(CantorSpec::new(0.3, 6).unwrap()).unwrap();
        let s = c.truncated_set();
        for i in 0..=2000 {
            let x = i as f64 / 2000.0;
            assert_eq!(c.contains(x), s.contains(x), "x = {x}");
        }
        let cell = c.locate(0.1, 2).unwrap();
        assert!((cell.interval.hi - 0.13).abs() < 1e-15);
    }

    #[test]
    fn mirror_symmetry() {
        let c = CantorConstruction::fat(CantorSpec::new(0.3, 8).unwrap()).unwrap();
        let s = c.truncated_set();
        for i in 0..5000 {
            let x = (i as f64 + 0.37) / 5000.0;
            let near_boundary = s
                .iter()
                .any(|p| (p.lo - x).abs() < 1e-9 || (p.hi - x).abs() < 1e-9);
            if !near_boundary {
                assert_eq!(c.contains(x), c.contains(1.0 - x), "x = {x}");
            }
        }
    }

    #[test]
    fn distance_matches_enumeration() {
        let c = CantorConstruction::fat(CantorSpec::new(0.2, 7).unwrap()).unwrap();
        let s = c.truncated_set();
        for i in 0..=3000 {
            let x = -0.1 + 1.2 * i as f64 / 3000.0;
            assert!((c.distance(x) - distance_to_set(&s, x)).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn ternary_pieces() {
        let t = CantorConstruction::ternary(2);
        let s = t.truncated_set();
        assert_eq!(s.len(), 4);
        assert!((s.total_length() - 4.0 / 9.0).abs() < 1e-15);
        assert!(t.contains(1.0 / 3.0));
        assert!(!t.contains(0.5));
    }
}
