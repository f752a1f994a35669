//! Piecewise-cubic curves `[0,1] → ℝᵈ` defined by Hermite data at knots.
//!
//! Each knot carries a position and one-sided derivatives. Pieces are the
//! cubic Hermite interpolants of neighbouring knots, so continuity of the
//! value is exact by construction, and a curve is C¹ exactly when every
//! interior knot has bitwise-equal left and right derivatives. Degree-1
//! and degree-2 pieces are stored in the same form (their Hermite data
//! reproduces them).

use std::fmt::Write as _;

use super::bounds::Bounds;
use super::interval::Interval;
use super::point::Point;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub t: f64,
    pub pos: Point,
    pub d_left: Point,
    pub d_right: Point,
}

impl Knot {
    pub fn smooth(t: f64, pos: Point, d: Point) -> Self {
        Knot {
            t,
            pos,
            d_left: d.clone(),
            d_right: d,
        }
    }

    pub fn is_kink(&self) -> bool {
        self.d_left != self.d_right
    }
}

/// Monomial coefficients of one piece in the local variable
/// `s = (t - t0) / h ∈ [0, 1]`, one `[a0, a1, a2, a3]` block per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub coeffs: Vec<[f64; 4]>,
}

impl Piece {
    fn hermite(a: &Knot, b: &Knot) -> Piece {
        let h = b.t - a.t;
        let coeffs = (0..a.pos.dim())
            .map(|j| {
                let (p0, p1) = (a.pos[j], b.pos[j]);
                let (m0, m1) = (h * a.d_right[j], h * b.d_left[j]);
                [
                    p0,
                    m0,
                    3.0 * (p1 - p0) - 2.0 * m0 - m1,
                    2.0 * (p0 - p1) + m0 + m1,
                ]
            })
            .collect();
        Piece {
            t0: a.t,
            t1: b.t,
            coeffs,
        }
    }

    pub fn width(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn value_at(&self, t: f64) -> Point {
        let s = (t - self.t0) / self.width();
        Point::from_vec(
            self.coeffs
                .iter()
                .map(|c| c[0] + s * (c[1] + s * (c[2] + s * c[3])))
                .collect(),
        )
    }

    pub fn derivative_at(&self, t: f64) -> Point {
        let h = self.width();
        let s = (t - self.t0) / h;
        Point::from_vec(
            self.coeffs
                .iter()
                .map(|c| (c[1] + s * (2.0 * c[2] + s * 3.0 * c[3])) / h)
                .collect(),
        )
    }

    /// Outward-rounded enclosure of each coordinate over `cell ⊆ [t0, t1]`.
    /// Widened by a few ulps so it also covers the knot data.
    pub fn enclose(&self, cell: Interval) -> Vec<Bounds> {
        let w = self.width();
        let s = Bounds::new(
            ((cell.lo - self.t0) / w).next_down().max(0.0),
            ((cell.hi - self.t0) / w).next_up().min(1.0),
        );
        let s = Bounds::new(s.lo.min(s.hi), s.hi);
        self.coeffs
            .iter()
            .map(|c| {
                let v = Bounds::point(c[3])
                    .mul(s)
                    .add(Bounds::point(c[2]))
                    .mul(s)
                    .add(Bounds::point(c[1]))
                    .mul(s)
                    .add(Bounds::point(c[0]));
                let slack = 4.0 * f64::EPSILON * (v.lo.abs().max(v.hi.abs()) + 1.0);
                Bounds::new(v.lo - slack, v.hi + slack)
            })
            .collect()
    }

    /// Coefficients of the derivative (with respect to `t`) in the same
    /// local variable, padded to cubic form.
    pub fn derivative_coeffs(&self) -> Vec<[f64; 4]> {
        let h = self.width();
        self.coeffs
            .iter()
            .map(|c| [c[1] / h, 2.0 * c[2] / h, 3.0 * c[3] / h, 0.0])
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    knots: Vec<Knot>,
    pieces: Vec<Piece>,
}

impl Curve {
    /// Builds a curve from knot data. Knots must start at 0, end at 1, be
    /// strictly increasing and share one ambient dimension `d ≥ 2`.
    pub fn from_knots(knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("a curve needs at least two knots".into()));
        }
        if knots[0].t != 0.0 || knots[knots.len() - 1].t != 1.0 {
            return Err(Error::Domain("knots must span exactly [0, 1]".into()));
        }
        let dim = knots[0].pos.dim();
        if dim < 2 {
            return Err(Error::Domain("ambient dimension must be at least 2".into()));
        }
        for w in knots.windows(2) {
            if !(w[0].t < w[1].t) {
                return Err(Error::Domain(format!(
                    "knots not strictly increasing at t = {}",
                    w[1].t
                )));
            }
        }
        for k in &knots {
            if k.pos.dim() != dim || k.d_left.dim() != dim || k.d_right.dim() != dim {
                return Err(Error::Domain("mixed ambient dimensions".into()));
            }
            let all = k
                .pos
                .coords()
                .iter()
                .chain(k.d_left.coords())
                .chain(k.d_right.coords());
            if all.clone().any(|c| !c.is_finite()) {
                return Err(Error::Domain(format!("non-finite knot data at t = {}", k.t)));
            }
        }
        let pieces = knots.windows(2).map(|w| Piece::hermite(&w[0], &w[1])).collect();
        Ok(Curve { knots, pieces })
    }

    /// C¹ curve from Hermite data.
    pub fn hermite(ts: &[f64], positions: &[Point], derivatives: &[Point]) -> Result<Self> {
        if ts.len() != positions.len() || ts.len() != derivatives.len() {
            return Err(Error::Domain("Hermite data lengths differ".into()));
        }
        Self::from_knots(
            ts.iter()
                .zip(positions)
                .zip(derivatives)
                .map(|((&t, p), d)| Knot::smooth(t, p.clone(), d.clone()))
                .collect(),
        )
    }

    /// The affine curve `t ↦ start + t·velocity`.
    pub fn affine(start: Point, velocity: Point) -> Self {
        let end = &start + &velocity;
        Self::hermite(&[0.0, 1.0], &[start, end], &[velocity.clone(), velocity])
            .expect("affine curve data is valid")
    }

    /// Continuous piecewise-linear curve through `points` at parameters `ts`;
    /// interior knots are kinks wherever the slope changes.
    pub fn piecewise_linear(ts: &[f64], points: &[Point]) -> Result<Self> {
        if ts.len() != points.len() || ts.len() < 2 {
            return Err(Error::Domain("piecewise-linear data mismatch".into()));
        }
        let slopes: Vec<Point> = ts
            .windows(2)
            .zip(points.windows(2))
            .map(|(t, p)| (&p[1] - &p[0]).scale(1.0 / (t[1] - t[0])))
            .collect();
        let n = ts.len();
        let knots = (0..n)
            .map(|i| Knot {
                t: ts[i],
                pos: points[i].clone(),
                d_left: slopes[i.saturating_sub(1)].clone(),
                d_right: slopes[(i).min(n - 2)].clone(),
            })
            .collect();
        Self::from_knots(knots)
    }

    pub fn dim(&self) -> usize {
        self.knots[0].pos.dim()
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        self.knots.iter().map(|k| k.t).collect()
    }

    /// Interior knots at which the derivative jumps.
    pub fn kinks(&self) -> Vec<f64> {
        self.knots[1..self.knots.len() - 1]
            .iter()
            .filter(|k| k.is_kink())
            .map(|k| k.t)
            .collect()
    }

    pub fn is_c1(&self) -> bool {
        self.kinks().is_empty()
    }

    fn check_t(t: f64) -> Result<()> {
        if (0.0..=1.0).contains(&t) {
            Ok(())
        } else {
            Err(Error::Domain(format!("parameter {t} outside [0, 1]")))
        }
    }

    fn knot_index(&self, t: f64) -> Option<usize> {
        self.knots
            .binary_search_by(|k| k.t.total_cmp(&t))
            .ok()
    }

    /// Index of the piece whose closed parameter range contains `t`
    /// (the right-hand piece at interior knots).
    pub fn piece_index(&self, t: f64) -> usize {
        let k = self.knots.partition_point(|k| k.t <= t);
        k.clamp(1, self.pieces.len()) - 1
    }

    /// Position and derivative at `t`. At knots the stored Hermite data is
    /// returned; at a kink this is the right derivative (left at `t = 1`).
    pub fn eval(&self, t: f64) -> Result<(Point, Point)> {
        Self::check_t(t)?;
        if let Some(i) = self.knot_index(t) {
            let k = &self.knots[i];
            let d = if i + 1 == self.knots.len() {
                &k.d_left
            } else {
                &k.d_right
            };
            return Ok((k.pos.clone(), d.clone()));
        }
        let p = &self.pieces[self.piece_index(t)];
        Ok((p.value_at(t), p.derivative_at(t)))
    }

    pub fn position(&self, t: f64) -> Point {
        let t = t.clamp(0.0, 1.0);
        if let Some(i) = self.knot_index(t) {
            return self.knots[i].pos.clone();
        }
        self.pieces[self.piece_index(t)].value_at(t)
    }

    /// One-sided derivatives at `t` (equal away from knots).
    pub fn derivative_sides(&self, t: f64) -> (Point, Point) {
        let t = t.clamp(0.0, 1.0);
        if let Some(i) = self.knot_index(t) {
            let k = &self.knots[i];
            return (k.d_left.clone(), k.d_right.clone());
        }
        let d = self.pieces[self.piece_index(t)].derivative_at(t);
        (d.clone(), d)
    }

    /// Evaluation through the piece on the left of `t` (polynomial, not knot data).
    pub fn eval_left_piece(&self, t: f64) -> (Point, Point) {
        let k = self.knots.partition_point(|k| k.t < t).clamp(1, self.pieces.len()) - 1;
        let p = &self.pieces[k];
        (p.value_at(t), p.derivative_at(t))
    }

    /// Knot data at the union of both curves' breakpoints (plus `extra`),
    /// combined pointwise by `op`.
    fn merged(&self, other: &Curve, extra: &[f64], op: impl Fn(&Point, &Point) -> Point) -> Result<Curve> {
        if self.dim() != other.dim() {
            return Err(Error::Domain(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let mut ts: Vec<f64> = self
            .knots
            .iter()
            .chain(&other.knots)
            .map(|k| k.t)
            .chain(extra.iter().copied().filter(|t| (0.0..=1.0).contains(t)))
            .collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        let knots = ts
            .into_iter()
            .map(|t| {
                let (al, ar) = self.derivative_sides(t);
                let (bl, br) = other.derivative_sides(t);
                Knot {
                    t,
                    pos: op(&self.position(t), &other.position(t)),
                    d_left: op(&al, &bl),
                    d_right: op(&ar, &br),
                }
            })
            .collect();
        Curve::from_knots(knots)
    }

    pub fn add(&self, other: &Curve) -> Result<Curve> {
        self.merged(other, &[], |a, b| a + b)
    }

    pub fn sub(&self, other: &Curve) -> Result<Curve> {
        self.merged(other, &[], |a, b| a - b)
    }

    /// Same curve with additional knots inserted (no change in shape).
    pub fn refined(&self, extra: &[f64]) -> Curve {
        let zero = Curve::affine(Point::zero(self.dim()), Point::zero(self.dim()));
        self.merged(&zero, extra, |a, _| a.clone())
            .expect("refinement keeps dimension")
    }

    pub fn scale(&self, s: f64) -> Curve {
        let knots = self
            .knots
            .iter()
            .map(|k| Knot {
                t: k.t,
                pos: k.pos.scale(s),
                d_left: k.d_left.scale(s),
                d_right: k.d_right.scale(s),
            })
            .collect();
        Curve::from_knots(knots).expect("scaling preserves validity")
    }

    /// Text record: a header line `curve <dim> <knot count>` followed by one
    /// line per knot with `t`, position, left and right derivative, every
    /// number written with 17 significant digits.
    pub fn to_record(&self) -> String {
        let mut s = format!("curve {} {}\n", self.dim(), self.knots.len());
        for k in &self.knots {
            write!(s, "{:.16e}", k.t).unwrap();
            for c in k
                .pos
                .coords()
                .iter()
                .chain(k.d_left.coords())
                .chain(k.d_right.coords())
            {
                write!(s, " {c:.16e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Curve> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty curve record".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "curve" {
            return Err(Error::Parse(format!("bad curve header `{header}`")));
        }
        let num = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| Error::Parse(format!("bad integer `{s}`")))
        };
        let (dim, count) = (num(h[1])?, num(h[2])?);
        let mut knots = Vec::with_capacity(count);
        for line in lines.by_ref().take(count) {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|x| x.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{x}`"))))
                .collect::<Result<_>>()?;
            if v.len() != 1 + 3 * dim {
                return Err(Error::Parse(format!("knot line has {} fields", v.len())));
            }
            knots.push(Knot {
                t: v[0],
                pos: Point::from_vec(v[1..1 + dim].to_vec()),
                d_left: Point::from_vec(v[1 + dim..1 + 2 * dim].to_vec()),
                d_right: Point::from_vec(v[1 + 2 * dim..].to_vec()),
            });
        }
        if knots.len() != count {
            return Err(Error::Parse(format!(
                "expected {count} knots, found {}",
                knots.len()
            )));
        }
        Curve::from_knots(knots)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn horizontal() -> Curve {
        Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
    }

    #[test]
    fn affine_evaluation() {
        let (p, d) = horizontal().eval(0.5).unwrap();
        assert_eq!(p, Point::xy(0.5, 0.0));
        assert_eq!(d, Point::xy(1.0, 0.0));
        let (p0, d0) = horizontal().eval(0.0).unwrap();
        assert_eq!((p0, d0), (Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)));
    }

    #[test]
    fn hermite_line_reproduces_line() {
        let c = Curve::hermite(
            &[0.0, 1.0],
            &[Point::xy(0.0, 0.0), Point::xy(1.0, 0.0)],
            &[Point::xy(1.0, 0.0), Point::xy(1.0, 0.0)],
        )
        .unwrap();
        let (p, d) = c.eval(0.25).unwrap();
        assert_eq!(p, Point::xy(0.25, 0.0));
        assert_eq!(d, Point::xy(1.0, 0.0));
    }

    #[test]
    fn out_of_domain() {
        assert!(horizontal().eval(1.5).is_err());
        assert!(horizontal().eval(-1e-12).is_err());
    }

    #[test]
    fn kinks_reported_for_tents() {
        let c = Curve::piecewise_linear(
            &[0.0, 0.5, 1.0],
            &[Point::xy(0.0, 0.0), Point::xy(0.5, 1.0), Point::xy(1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(c.kinks(), vec![0.5]);
        assert!(!c.is_c1());
        assert_eq!(c.position(0.25), Point::xy(0.25, 0.5));
    }

    #[test]
    fn record_roundtrip_is_exact() {
        let c = Curve::hermite(
            &[0.0, 0.3, 1.0],
            &[Point::xy(0.1, 1.0 / 3.0), Point::xy(0.7, -2.0), Point::xy(1.0, 0.0)],
            &[Point::xy(1.0, 0.0), Point::xy(0.1, 1e-17), Point::xy(2.0, 3.0)],
        )
        .unwrap();
        assert_eq!(Curve::from_record(&c.to_record()).unwrap(), c);
    }

    #[test]
    fn add_merges_breakpoints() {
        let a = Curve::hermite(
            &[0.0, 0.5, 1.0],
            &[Point::xy(0.0, 0.0), Point::xy(0.5, 0.1), Point::xy(1.0, 0.0)],
            &[Point::xy(1.0, 0.0), Point::xy(1.0, 0.0), Point::xy(1.0, 0.0)],
        )
        .unwrap();
        let b = horizontal().refined(&[0.25]);
        let s = a.add(&b).unwrap();
        assert_eq!(s.breakpoints(), vec![0.0, 0.25, 0.5, 1.0]);
        for t in [0.1, 0.3, 0.77] {
            let expect = &a.position(t) + &b.position(t);
            assert!(s.position(t).distance(&expect) < 1e-14);
        }
        assert!(a.add(&Curve::affine(Point::zero(3), Point::zero(3))).is_err());
    }

    proptest! {
        #[test]
        fn breakpoints_share_hermite_data(
            ys in prop::collection::vec(-1.0f64..1.0, 4),
            ds in prop::collection::vec(-2.0f64..2.0, 4),
        ) {
            let ts = [0.0, 0.2, 0.65, 1.0];
            let pos: Vec<Point> = ts.iter().zip(&ys).map(|(&t, &y)| Point::xy(t, y)).collect();
            let der: Vec<Point> = ds.iter().map(|&d| Point::xy(1.0, d)).collect();
            let c = Curve::hermite(&ts, &pos, &der).unwrap();
            prop_assert!(c.is_c1());
            for (i, &t) in ts.iter().enumerate().skip(1).take(2) {
                let (l, r) = c.derivative_sides(t);
                prop_assert_eq!(&l, &r);
                prop_assert_eq!(c.position(t), pos[i].clone());
                // polynomial limits agree with the shared data up to rounding
                let (pl, dl) = c.eval_left_piece(t);
                prop_assert!(pl.distance(&pos[i]) < 1e-12);
                prop_assert!(dl.distance(&der[i]) < 1e-9);
            }
        }
    }
}
