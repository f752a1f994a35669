//! Candidate intervals `[x − λd, x + λd]` around preimage points with a
//! certified hole at distance `d`, and greedy disjoint selection.

use crate::error::{invariant, Error, Result};
use crate::geometry::{Bounds, Curve, Interval, IntervalSet};
use crate::porous::{distance_to_set, HoleWitness, PorousSetOracle};
use crate::preimage::{preimage_measure_on, MeasureEstimate};

/// Halvings of the query scale before a candidate is abandoned.
const RETRIES: usize = 12;
/// Sample points per uncovered piece and sweep round.
const SAMPLES_PER_PIECE: usize = 8;
const MAX_ROUNDS: usize = 48;

#[derive(Debug, Clone, PartialEq)]
pub struct VitaliInterval {
    pub interval: Interval,
    pub x: f64,
    pub witness: HoleWitness,
}

impl VitaliInterval {
    /// Re-checks every defining condition from scratch.
    pub fn verify(&self, f: &Curve, oracle: &PorousSetOracle, lambda: f64, theta: f64) -> Result<()> {
        let (x, w) = (self.x, &self.witness);
        let fx = f.position(x);
        if !oracle.contains_point(&fx) {
            return Err(invariant("vitali", format!("f({x}) is not in the set")));
        }
        oracle.verify_witness(&fx, theta, w)?;
        let half = Bounds::point(lambda).mul(Bounds::point(w.d));
        let lo = Bounds::point(x).sub(half);
        let hi = Bounds::point(x).add(half);
        if !(Bounds::point(0.0).certainly_lt(lo) && hi.certainly_lt(Bounds::point(1.0))) {
            return Err(invariant("vitali", format!("interval around {x} leaves (0, 1)")));
        }
        if !(lo.lo <= self.interval.lo && self.interval.lo <= lo.hi && hi.lo <= self.interval.hi && self.interval.hi <= hi.hi) {
            return Err(invariant("vitali", "interval is not [x − λd, x + λd]"));
        }
        Ok(())
    }

    pub fn len(&self) -> f64 {
        self.interval.len()
    }
}

/// Search counters for one selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoverDiagnostics {
    pub rounds: usize,
    pub probes: usize,
    pub hole_failures: usize,
    pub rejected_overlap: usize,
    pub rejected_budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverSelection {
    pub chosen: Vec<VitaliInterval>,
    /// Certified upper bound on the measure of `B` left uncovered.
    pub uncovered_bound: f64,
    pub total_length: f64,
    /// Measure of the target set `B`.
    pub target: MeasureEstimate,
    /// False when candidate generation stalled before the budget was met.
    pub complete: bool,
    pub diagnostics: CoverDiagnostics,
}

impl CoverSelection {
    pub fn empty() -> Self {
        CoverSelection {
            chosen: Vec::new(),
            uncovered_bound: 0.0,
            total_length: 0.0,
            target: MeasureEstimate::exact(0.0),
            complete: true,
            diagnostics: CoverDiagnostics::default(),
        }
    }

    pub fn intervals(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.chosen.iter().map(|v| v.interval).collect())
    }

    /// Rows `lo,hi,x,h_coords,r,d`; hole coordinates are `;`-joined.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi,x,h_coords,r,d\n");
        for v in &self.chosen {
            let h: Vec<String> = v.witness.h.coords().iter().map(|c| format!("{c:.16e}")).collect();
            s.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e}\n",
                v.interval.lo,
                v.interval.hi,
                v.x,
                h.join(";"),
                v.witness.r,
                v.witness.d
            ));
        }
        s
    }
}

pub fn candidate_interval(
    f: &Curve,
    x: f64,
    lambda: f64,
    theta: f64,
    oracle: &PorousSetOracle,
) -> Result<VitaliInterval> {
    candidate_within(f, x, lambda, theta, oracle, f64::INFINITY)
}

/// Candidate whose half-length `λd` also stays below `room`.
fn candidate_within(
    f: &Curve,
    x: f64,
    lambda: f64,
    theta: f64,
    oracle: &PorousSetOracle,
    room: f64,
) -> Result<VitaliInterval> {
    if !(lambda > 1.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} must exceed 1")));
    }
    if !(theta > 0.0) {
        return Err(Error::Parameter(format!("theta = {theta} must be positive")));
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("candidate centre {x} must lie in (0, 1)")));
    }
    let fx = f.position(x);
    if !oracle.contains_point(&fx) {
        return Err(Error::Precondition(format!("f({x}) lies outside the set")));
    }
    let mut eps = theta.min(x / lambda).min((1.0 - x) / lambda).min(room / lambda);
    let mut last = None;
    for _ in 0..RETRIES {
        match oracle.find_hole(&fx, eps) {
            Ok(w) => {
                let half = lambda * w.d;
                let (lo, hi) = (x - half, x + half);
                if w.d < theta && lo > 0.0 && hi < 1.0 && half < room {
                    return Ok(VitaliInterval {
                        interval: Interval::of(lo, hi),
                        x,
                        witness: w,
                    });
                }
            }
            Err(e @ Error::Resolution(_)) => return Err(e),
            Err(e) => last = Some(e),
        }
        eps *= 0.5;
    }
    Err(last.unwrap_or_else(|| {
        Error::Resolution(format!("no hole at {x} satisfies the caps after {RETRIES} halvings"))
    }))
}

/// Base-2 radical inverse.
fn van_der_corput(mut i: u64) -> f64 {
    let mut v = 0.0;
    let mut base = 0.5;
    while i > 0 {
        if i & 1 == 1 {
            v += base;
        }
        i >>= 1;
        base *= 0.5;
    }
    v
}

/// Whether the closed interval misses the closed set entirely.
fn misses(set: &IntervalSet, i: Interval) -> bool {
    let v = set.intervals();
    let k = v.partition_point(|j| j.hi < i.lo);
    k == v.len() || v[k].lo > i.hi
}

/// Greedy disjoint selection over `B = f⁻¹(E) \ exclude`, keeping
/// `Σ|I| < |B| + budget`.
#[allow(clippy::too_many_arguments)]
pub fn select_disjoint_cover(
    f: &Curve,
    oracle: &PorousSetOracle,
    lambda: f64,
    theta: f64,
    exclude: &IntervalSet,
    budget: f64,
    seed: u64,
) -> Result<CoverSelection> {
    if !(budget > 0.0) {
        return Err(Error::Parameter(format!("budget {budget} must be positive")));
    }
    let tol = budget / 16.0;
    let free = exclude.complement();
    let b = preimage_measure_on(f, oracle, &free, tol)?;
    let b_set = b.covered.clone();
    if b_set.is_empty() && b.measure.upper() < budget {
        return Ok(CoverSelection {
            uncovered_bound: b.measure.upper(),
            target: b.measure,
            ..CoverSelection::empty()
        });
    }
    let cap = b.measure.lower() + budget;
    let mut chosen: Vec<VitaliInterval> = Vec::new();
    let mut taken = exclude.clone();
    let mut total = 0.0;
    let mut diag = CoverDiagnostics::default();
    let mut uncovered = b.measure.upper();
    let mut complete = uncovered < budget;
    let mut index = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 44;

    while !complete && diag.rounds < MAX_ROUNDS {
        diag.rounds += 1;
        let mut pieces: Vec<Interval> = b_set.difference(&taken).iter().copied().collect();
        pieces.sort_by(|a, b| b.len().total_cmp(&a.len()).then(a.lo.total_cmp(&b.lo)));
        let mut cands = Vec::new();
        for p in &pieces {
            for _ in 0..SAMPLES_PER_PIECE {
                index += 1;
                let x = p.lo + p.len() * van_der_corput(index);
                diag.probes += 1;
                let room = distance_to_set(&taken, x);
                if !(room > 0.0) {
                    continue;
                }
                match candidate_within(f, x, lambda, theta, oracle, room) {
                    Ok(c) => cands.push(c),
                    Err(_) => diag.hole_failures += 1,
                }
            }
        }
        // Least wasted length first.
        let waste = |c: &VitaliInterval| {
            let i = IntervalSet::single(c.interval);
            (c.len() - b_set.length_within(&i)) / c.len()
        };
        let mut keyed: Vec<(f64, VitaliInterval)> = cands.into_iter().map(|c| (waste(&c), c)).collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.x.total_cmp(&b.1.x)));
        let mut added = 0;
        for (_, c) in keyed {
            if !misses(&taken, c.interval) {
                diag.rejected_overlap += 1;
                continue;
            }
            if total + c.len() >= cap {
                diag.rejected_budget += 1;
                continue;
            }
            total += c.len();
            taken = taken.union(&IntervalSet::single(c.interval));
            chosen.push(c);
            added += 1;
        }
        if added == 0 {
            break;
        }
        let left = preimage_measure_on(f, oracle, &taken.complement(), tol)?;
        uncovered = left.measure.upper();
        complete = uncovered < budget;
    }
    if !complete {
        log::debug!(
            "cover stalled after {} rounds: uncovered ≤ {uncovered:e}, budget {budget:e}",
            diag.rounds
        );
    }
    Ok(CoverSelection {
        chosen,
        uncovered_bound: uncovered,
        total_length: total,
        target: b.measure,
        complete,
        diagnostics: diag,
    })
}

/// Smallest prefix length `K` whose tail has total length below
/// `tail_budget`; the head keeps the first `K` intervals.
pub fn truncate_cover(sel: &CoverSelection, tail_budget: f64) -> (CoverSelection, usize) {
    let n = sel.chosen.len();
    let mut suffix = vec![0.0; n + 1];
    for k in (0..n).rev() {
        suffix[k] = suffix[k + 1] + sel.chosen[k].len();
    }
    let k = (0..=n).find(|&k| suffix[k] < tail_budget).unwrap_or(n);
    let chosen: Vec<VitaliInterval> = sel.chosen[..k].to_vec();
    let total = chosen.iter().map(VitaliInterval::len).fold(0.0, |a, b| a + b);
    (
        CoverSelection {
            chosen,
            total_length: total,
            ..sel.clone()
        },
        k,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::porous::CantorSpec;

    fn fat(depth: usize) -> PorousSetOracle {
        PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, depth).unwrap(), 0.5).unwrap()
    }

    fn line() -> Curve {
        Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
    }

    #[test]
    fn reference_candidate() {
        let o = fat(6);
        let v = candidate_interval(&line(), 0.1, 4.0, 0.02, &o).unwrap();
        assert!((v.interval.lo - 0.083).abs() < 1e-12);
        assert!((v.interval.hi - 0.117).abs() < 1e-12);
        assert!((v.witness.h[0] - 0.10425).abs() < 1e-12);
        assert!((v.witness.r - 0.00405).abs() < 1e-12);
        assert!((v.witness.d - 0.00425).abs() < 1e-12);
        v.verify(&line(), &o, 4.0, 0.02).unwrap();
    }

    #[test]
    fn candidate_errors() {
        let o = fat(6);
        assert!(matches!(candidate_interval(&line(), 0.1, 4.0, 1e-9, &o), Err(Error::Resolution(_))));
        assert!(matches!(candidate_interval(&line(), 0.5, 4.0, 0.02, &o), Err(Error::Precondition(_))));
        assert!(matches!(candidate_interval(&line(), 0.0, 4.0, 0.02, &o), Err(Error::Domain(_))));
        assert!(matches!(candidate_interval(&line(), 1.0, 4.0, 0.02, &o), Err(Error::Domain(_))));
    }

    #[test]
    fn empty_targets() {
        let empty = PorousSetOracle::union(vec![], 0.5).unwrap();
        let s = select_disjoint_cover(&line(), &empty, 4.0, 0.1, &IntervalSet::empty(), 0.05, 1).unwrap();
        assert!(s.chosen.is_empty());
        assert_eq!(s.uncovered_bound, 0.0);
        let s = select_disjoint_cover(&line(), &fat(2), 4.0, 0.1, &IntervalSet::unit(), 0.05, 1).unwrap();
        assert!(s.chosen.is_empty());
        assert!(s.uncovered_bound < 0.05);
    }

    #[test]
    fn selection_invariants() {
        let o = fat(2);
        let f = line();
        let s = select_disjoint_cover(&f, &o, 4.0, 0.1, &IntervalSet::empty(), 0.05, 3).unwrap();
        assert!((s.target.value - 0.52).abs() < 0.01);
        assert!(!s.chosen.is_empty());
        assert!(s.total_length < s.target.lower() + 0.05);
        let mut iv: Vec<Interval> = s.chosen.iter().map(|v| v.interval).collect();
        iv.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        assert!(iv.windows(2).all(|w| w[0].hi < w[1].lo));
        for v in &s.chosen {
            v.verify(&f, &o, 4.0, 0.1).unwrap();
        }
        let again = select_disjoint_cover(&f, &o, 4.0, 0.1, &IntervalSet::empty(), 0.05, 3).unwrap();
        assert_eq!(s, again);
        let window = s.intervals().complement();
        let left = preimage_measure_on(&f, &o, &window, 1e-9).unwrap();
        assert!(left.measure.upper() <= s.uncovered_bound + 1e-9);
    }

    #[test]
    fn respects_exclusion() {
        let o = fat(4);
        let ex = IntervalSet::single(Interval::of(0.0, 0.5));
        let s = select_disjoint_cover(&line(), &o, 4.0, 0.1, &ex, 0.01, 9).unwrap();
        for v in &s.chosen {
            assert!(v.interval.lo > 0.5);
        }
    }

    fn synthetic(lens: &[f64]) -> CoverSelection {
        let mut at = 0.01;
        let chosen = lens
            .iter()
            .map(|&l| {
                let i = Interval::of(at, at + l);
                at += l + 0.001;
                VitaliInterval {
                    interval: i,
                    x: i.mid(),
                    witness: HoleWitness {
                        h: Point::xy(i.mid(), 1.0),
                        r: 0.5,
                        d: 1.0,
                    },
                }
            })
            .collect();
        CoverSelection {
            chosen,
            total_length: lens.iter().fold(0.0, |a, b| a + b),
            ..CoverSelection::empty()
        }
    }

    #[test]
    fn truncation_conventions() {
        let s = synthetic(&[0.3, 0.2, 0.1]);
        assert_eq!(truncate_cover(&s, 0.15).1, 2);
        assert_eq!(truncate_cover(&s, 10.0).1, 0);
        assert!(truncate_cover(&s, 10.0).0.chosen.is_empty());
        let one = synthetic(&[0.1]);
        let (head, k) = truncate_cover(&one, 1e-12);
        assert_eq!(k, 1);
        assert_eq!(head.chosen.len(), 1);
    }

    #[test]
    fn csv_rows() {
        let s = synthetic(&[0.3, 0.2]);
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("lo,hi,x,h_coords,r,d\n"));
    }
}
