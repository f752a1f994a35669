//! Certified measure of `γ⁻¹(E)` by adaptive dyadic bisection of the
//! parameter interval.
//!
//! Cells never straddle a curve knot, so each cell lives on one cubic
//! piece. Cylinder sets (and unions of cylinders) use interval-arithmetic
//! enclosures of the first coordinate; other sets use a Lipschitz tube
//! around the midpoint image.

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Curve, Interval, IntervalSet, Point};
use crate::porous::PorousSetOracle;

/// Bisection levels before giving up on a tolerance.
const MAX_LEVELS: usize = 60;

/// A measure value with a two-sided error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureEstimate {
    pub value: f64,
    pub error_bound: f64,
}

impl MeasureEstimate {
    pub fn exact(value: f64) -> Self {
        MeasureEstimate {
            value,
            error_bound: 0.0,
        }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.error_bound
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error_bound
    }

    /// Whether two estimates are consistent within their combined bounds.
    pub fn agrees_with(&self, other: &MeasureEstimate, slack: f64) -> bool {
        (self.value - other.value).abs() <= self.error_bound + other.error_bound + slack
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreimageReport {
    pub measure: MeasureEstimate,
    /// Parameter intervals certified to map into the set.
    pub covered: IntervalSet,
    /// Parameter intervals left undecided.
    pub uncertain: IntervalSet,
    /// Parameter intervals certified to map outside the set.
    pub outside: IntervalSet,
    /// False when the tolerance could not be reached at floating-point
    /// resolution; the bracket is still valid.
    pub reached_tolerance: bool,
}

impl PreimageReport {
    fn empty() -> Self {
        PreimageReport {
            measure: MeasureEstimate::exact(0.0),
            covered: IntervalSet::empty(),
            uncertain: IntervalSet::empty(),
            outside: IntervalSet::empty(),
            reached_tolerance: true,
        }
    }

    /// `lo,hi,class` rows followed by a `measure,error_bound` summary.
    pub fn to_csv(&self) -> String {
        let mut rows: Vec<(Interval, &str)> = Vec::new();
        rows.extend(self.covered.iter().map(|&i| (i, "inside")));
        rows.extend(self.uncertain.iter().map(|&i| (i, "uncertain")));
        rows.extend(self.outside.iter().map(|&i| (i, "outside")));
        rows.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
        let mut s = String::from("lo,hi,class\n");
        for (i, c) in rows {
            s.push_str(&format!("{:.16e},{:.16e},{c}\n", i.lo, i.hi));
        }
        s.push_str(&format!(
            "measure,error_bound\n{:.16e},{:.16e}\n",
            self.measure.value, self.measure.error_bound
        ));
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Inside,
    Outside,
    Undecided,
}

pub fn preimage_measure(curve: &Curve, oracle: &PorousSetOracle, tol: f64) -> Result<PreimageReport> {
    preimage_measure_on(curve, oracle, &IntervalSet::unit(), tol)
}

pub fn preimage_measure_on(
    curve: &Curve,
    oracle: &PorousSetOracle,
    window: &IntervalSet,
    tol: f64,
) -> Result<PreimageReport> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {tol} must be positive")));
    }
    let window = window.intersection(&IntervalSet::unit());
    if window.is_empty() {
        return Ok(PreimageReport::empty());
    }
    match oracle.base_set() {
        Some(base) => Ok(bisect(curve, &window, tol, |piece, cell| {
            classify_first_axis(curve, piece, cell, &base)
        })),
        None => {
            let bounds: Vec<f64> = curve.pieces().iter().map(piece_speed_bound).collect();
            Ok(bisect(curve, &window, tol, |piece, cell| {
                classify_tube(curve, piece, cell, bounds[piece], oracle)
            }))
        }
    }
}

/// Level-synchronous bisection: every undecided cell is halved until the
/// undecided length is at most `2 tol`.
fn bisect(
    curve: &Curve,
    window: &IntervalSet,
    tol: f64,
    classify: impl Fn(usize, Interval) -> Class,
) -> PreimageReport {
    let mut cells: Vec<(usize, Interval)> = Vec::new();
    for w in window.iter() {
        for (k, p) in curve.pieces().iter().enumerate() {
            if let Some(i) = w.intersect(&Interval::of(p.t0, p.t1)) {
                if !i.is_degenerate() {
                    cells.push((k, i));
                }
            }
        }
    }
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    let mut reached = false;
    for level in 0..=MAX_LEVELS {
        let mut pending = Vec::new();
        for (k, c) in cells {
            match classify(k, c) {
                Class::Inside => inside.push(c),
                Class::Outside => outside.push(c),
                Class::Undecided => pending.push((k, c)),
            }
        }
        let open: f64 = pending.iter().map(|(_, c)| c.len()).sum();
        cells = pending;
        if 0.5 * open <= tol {
            reached = true;
            break;
        }
        if level == MAX_LEVELS {
            break;
        }
        let mut next = Vec::with_capacity(2 * cells.len());
        for &(k, c) in &cells {
            let m = c.mid();
            if m <= c.lo || m >= c.hi {
                next.push((k, c));
                continue;
            }
            next.push((k, Interval::of(c.lo, m)));
            next.push((k, Interval::of(m, c.hi)));
        }
        if next.len() == cells.len() {
            break;
        }
        cells = next;
    }
    let covered = IntervalSet::from_intervals(inside);
    let uncertain = IntervalSet::from_intervals(cells.into_iter().map(|(_, c)| c).collect());
    let outside = IntervalSet::from_intervals(outside);
    let u = uncertain.total_length();
    PreimageReport {
        measure: MeasureEstimate {
            value: covered.total_length() + 0.5 * u,
            error_bound: 0.5 * u,
        },
        covered,
        uncertain,
        outside,
        reached_tolerance: reached,
    }
}

/// Enclosure of the first coordinate of piece `k` over the cell.
pub(crate) fn first_axis_range(curve: &Curve, k: usize, cell: Interval) -> Bounds {
    curve.pieces()[k].enclose(cell)[0]
}

fn classify_first_axis(curve: &Curve, k: usize, cell: Interval, base: &IntervalSet) -> Class {
    let r = first_axis_range(curve, k, cell);
    let v = base.intervals();
    let j = v.partition_point(|i| i.hi < r.lo);
    if j == v.len() || v[j].lo > r.hi {
        Class::Outside
    } else if v[j].lo <= r.lo && r.hi <= v[j].hi {
        Class::Inside
    } else {
        Class::Undecided
    }
}

/// Upper bound of `‖γ′‖` on a piece from its monomial coefficients.
pub(crate) fn piece_speed_bound(p: &crate::geometry::Piece) -> f64 {
    let sq: f64 = p
        .derivative_coeffs()
        .iter()
        .map(|c| {
            let m = c[0].abs() + c[1].abs() + c[2].abs();
            m * m
        })
        .sum();
    sq.sqrt() * (1.0 + 1e-12)
}

fn classify_tube(curve: &Curve, k: usize, cell: Interval, speed: f64, oracle: &PorousSetOracle) -> Class {
    let p = &curve.pieces()[k];
    let centre: Point = p.value_at(cell.mid());
    let slack = 1e-14 * (1.0 + centre.norm());
    let rho = speed * 0.5 * cell.len() + slack;
    if oracle.distance(&centre) > rho {
        Class::Outside
    } else if oracle.inner_distance(&centre) > rho {
        Class::Inside
    } else {
        Class::Undecided
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::porous::{CantorSpec, Membership, Raster};
    use proptest::prelude::*;

    fn fat2() -> PorousSetOracle {
        PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, 2).unwrap(), 0.5).unwrap()
    }

    fn line(y: f64) -> Curve {
        Curve::affine(Point::xy(0.0, y), Point::xy(1.0, 0.0))
    }

    #[test]
    fn horizontal_line_recovers_the_set() {
        let r = preimage_measure(&line(0.0), &fat2(), 1e-6).unwrap();
        assert!((r.measure.value - 0.52).abs() <= 1e-6);
        assert!(r.measure.error_bound <= 1e-6);
        assert!(r.reached_tolerance);
    }

    #[test]
    fn vertical_lines() {
        let o = fat2();
        let gap = Curve::affine(Point::xy(0.5, 0.0), Point::xy(0.0, 1.0));
        assert_eq!(preimage_measure(&gap, &o, 1e-9).unwrap().measure.value, 0.0);
        let inside = Curve::affine(Point::xy(0.1, 0.0), Point::xy(0.0, 1.0));
        assert_eq!(preimage_measure(&inside, &o, 1e-9).unwrap().measure.value, 1.0);
    }

    #[test]
    fn windows() {
        let o = fat2();
        let f = line(0.0);
        let full = preimage_measure(&f, &o, 1e-9).unwrap();
        let same = preimage_measure_on(&f, &o, &IntervalSet::unit(), 1e-9).unwrap();
        assert_eq!(full, same);
        let none = preimage_measure_on(&f, &o, &IntervalSet::empty(), 1e-9).unwrap();
        assert_eq!(none.measure.value, 0.0);
        let w = IntervalSet::single(Interval::of(0.0, 0.35));
        let part = preimage_measure_on(&f, &o, &w, 1e-9).unwrap();
        assert!((part.measure.value - 0.26).abs() <= 1e-9);
    }

    #[test]
    fn tube_path_matches_fast_path() {
        // The raster of a D=2 fat Cantor strip over y in [-1, 1].
        let fat = fat2();
        let base = fat.base_set().unwrap();
        let cell = 0.01;
        let raster = Raster::from_fn([0.0, -1.0], cell, 100, 200, |i, _| {
            let x = (i as f64 + 0.5) * cell;
            base.contains(x)
        })
        .unwrap();
        let o = PorousSetOracle::rasterized(raster, 0.3).unwrap();
        let f = line(0.0);
        let r = preimage_measure(&f, &o, 1e-7).unwrap();
        // Cells [0,0.13] ∪ [0.22,0.35] ∪ ... rounded to the 0.01 grid.
        let expect: f64 = (0..100)
            .filter(|&i| base.contains((i as f64 + 0.5) * cell))
            .count() as f64
            * cell;
        assert!((r.measure.value - expect).abs() <= r.measure.error_bound + 1e-12);
        assert!(r.measure.error_bound <= 1e-7);
    }

    #[test]
    fn csv_has_summary() {
        let r = preimage_measure(&line(0.0), &fat2(), 1e-3).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("lo,hi,class\n"));
        assert!(csv.contains("measure,error_bound\n"));
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(preimage_measure(&line(0.0), &fat2(), 0.0).is_err());
    }

    fn wiggle(a: f64, b: f64) -> Curve {
        let ts = [0.0, 0.3, 0.7, 1.0];
        let pos: Vec<Point> = ts.iter().map(|&t| Point::xy(t + a * t * (1.0 - t), b * t)).collect();
        let der: Vec<Point> = ts.iter().map(|&t| Point::xy(1.0 + a * (1.0 - 2.0 * t), b)).collect();
        Curve::hermite(&ts, &pos, &der).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn tolerance_monotone_and_nested(a in -0.9f64..0.9, b in -1.0f64..1.0) {
            let o = PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, 5).unwrap(), 0.5).unwrap();
            let f = wiggle(a, b);
            let coarse = preimage_measure(&f, &o, 1e-4).unwrap();
            let fine = preimage_measure(&f, &o, 1e-7).unwrap();
            prop_assert!(fine.measure.error_bound <= coarse.measure.error_bound);
            prop_assert!(coarse.covered.is_subset_of(&fine.covered));
            prop_assert!(coarse.measure.agrees_with(&fine.measure, 1e-12));
        }

        #[test]
        fn additive_over_windows(a in -0.9f64..0.9, cut in 0.01f64..0.99) {
            let o = PorousSetOracle::fat_cantor_product(CantorSpec::new(0.25, 5).unwrap(), 0.5).unwrap();
            let f = wiggle(a, 0.3);
            let left = IntervalSet::single(Interval::of(0.0, cut));
            let right = IntervalSet::single(Interval::of(cut, 1.0));
            let full = preimage_measure(&f, &o, 1e-8).unwrap();
            let l = preimage_measure_on(&f, &o, &left, 1e-8).unwrap();
            let r = preimage_measure_on(&f, &o, &right, 1e-8).unwrap();
            let sum = MeasureEstimate {
                value: l.measure.value + r.measure.value,
                error_bound: l.measure.error_bound + r.measure.error_bound,
            };
            prop_assert!(sum.agrees_with(&full.measure, 1e-12));
        }

        #[test]
        fn classified_midpoints_agree_with_contains(a in -0.9f64..0.9, b in -1.0f64..1.0) {
            let o = PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, 4).unwrap(), 0.5).unwrap();
            let f = wiggle(a, b);
            let r = preimage_measure(&f, &o, 1e-6).unwrap();
            for i in r.covered.iter() {
                prop_assert_eq!(o.contains(&f.position(i.mid()), 1e-12), Membership::Inside);
            }
            for i in r.outside.iter() {
                prop_assert_eq!(o.contains(&f.position(i.mid()), 1e-300), Membership::Outside);
            }
        }
    }
}
