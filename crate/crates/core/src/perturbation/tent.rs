use crate::error::{Error, Result};
use crate::geometry::{Curve, Interval, Point};
use crate::vitali::CoverSelection;

/// One tent `ψ = φ·p` on `I = [x − half, x + half]` with `φ(x) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tent {
    pub interval: Interval,
    pub x: f64,
    pub half: f64,
    /// Peak vector `p = h − f(x)`.
    pub peak: Point,
    /// Slope magnitude `‖p‖ / half` of `φ·‖p‖`.
    pub alpha: f64,
    /// Hole centre `h` and radius `r`.
    pub centre: Point,
    pub radius: f64,
    pub d: f64,
}

impl Tent {
    pub fn phi(&self, t: f64) -> f64 {
        if self.interval.contains(t) {
            (1.0 - (t - self.x).abs() / self.half).max(0.0)
        } else {
            0.0
        }
    }

    /// Constant derivative vector on the rising side.
    pub fn rise(&self) -> Point {
        self.peak.scale(1.0 / self.half)
    }

    /// `∫_I ψ′` in closed form: both sides have length `half`.
    pub fn derivative_integral(&self) -> Point {
        let up = self.rise().scale(self.half);
        let down = self.rise().scale(-self.half);
        &up + &down
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TentPerturbation {
    tents: Vec<Tent>,
    /// Indices of `tents` sorted by position.
    order: Vec<usize>,
    lambda: f64,
    dim: usize,
}

impl TentPerturbation {
    pub fn new(tents: Vec<Tent>, lambda: f64, dim: usize) -> Result<Self> {
        let mut order: Vec<usize> = (0..tents.len()).collect();
        order.sort_by(|&a, &b| tents[a].interval.lo.total_cmp(&tents[b].interval.lo));
        for w in order.windows(2) {
            if !(tents[w[0]].interval.hi < tents[w[1]].interval.lo) {
                return Err(Error::Precondition("tent intervals must be pairwise disjoint".into()));
            }
        }
        Ok(TentPerturbation {
            tents,
            order,
            lambda,
            dim,
        })
    }

    pub fn tents(&self) -> &[Tent] {
        &self.tents
    }

    pub fn len(&self) -> usize {
        self.tents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tents.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Tents in left-to-right order.
    pub fn sorted(&self) -> impl Iterator<Item = &Tent> {
        self.order.iter().map(|&i| &self.tents[i])
    }

    fn tent_at(&self, t: f64) -> Option<&Tent> {
        let k = self.order.partition_point(|&i| self.tents[i].interval.hi < t);
        self.order
            .get(k)
            .map(|&i| &self.tents[i])
            .filter(|tent| tent.interval.contains(t))
    }

    pub fn eval(&self, t: f64) -> Point {
        match self.tent_at(t) {
            Some(tent) => tent.peak.scale(tent.phi(t)),
            None => Point::zero(self.dim),
        }
    }

    /// `ψ′(t)`, or `None` at a non-differentiable point.
    pub fn derivative(&self, t: f64) -> Option<Point> {
        match self.tent_at(t) {
            None => Some(Point::zero(self.dim)),
            Some(tent) => {
                if t == tent.interval.lo || t == tent.interval.hi || t == tent.x {
                    None
                } else if t < tent.x {
                    Some(tent.rise())
                } else {
                    Some(tent.rise().scale(-1.0))
                }
            }
        }
    }

    /// Points where `ψ` is not differentiable, sorted.
    pub fn knots(&self) -> Vec<f64> {
        self.sorted()
            .flat_map(|t| [t.interval.lo, t.x, t.interval.hi])
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.tents.iter().map(|t| t.peak.norm()).fold(0.0, f64::max)
    }

    /// `s(ψ)`: the closed-form slope bound `1/λ`.
    pub fn max_slope(&self) -> f64 {
        if self.tents.is_empty() {
            0.0
        } else {
            1.0 / self.lambda
        }
    }

    /// `ψ_L`: the first `L` tents.
    pub fn truncated(&self, l: usize) -> TentPerturbation {
        TentPerturbation::new(self.tents[..l.min(self.len())].to_vec(), self.lambda, self.dim)
            .expect("a subfamily of disjoint tents is disjoint")
    }

    /// Keeps the tents whose indices satisfy `keep`, preserving order.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> TentPerturbation {
        let tents = (0..self.len()).filter(|&k| keep(k)).map(|k| self.tents[k].clone()).collect();
        TentPerturbation::new(tents, self.lambda, self.dim).expect("subfamily stays disjoint")
    }

    /// `ψ` as a piecewise-linear curve with kinks.
    pub fn as_curve(&self) -> Curve {
        let mut ts = vec![0.0];
        let mut ps = vec![Point::zero(self.dim)];
        for tent in self.sorted() {
            for (t, v) in [
                (tent.interval.lo, Point::zero(self.dim)),
                (tent.x, tent.peak.clone()),
                (tent.interval.hi, Point::zero(self.dim)),
            ] {
                ts.push(t);
                ps.push(v);
            }
        }
        ts.push(1.0);
        ps.push(Point::zero(self.dim));
        Curve::piecewise_linear(&ts, &ps).expect("tent knots are increasing inside (0, 1)")
    }
}

/// Tents on the first `k` intervals of a cover.
pub fn build_tent(f: &Curve, cover: &CoverSelection, k: usize, lambda: f64) -> Result<TentPerturbation> {
    if k > cover.chosen.len() {
        return Err(Error::Precondition(format!(
            "K = {k} exceeds the {} selected intervals",
            cover.chosen.len()
        )));
    }
    let tents = cover.chosen[..k]
        .iter()
        .map(|v| {
            let fx = f.position(v.x);
            let peak = &v.witness.h - &fx;
            let half = lambda * v.witness.d;
            let norm = peak.norm();
            Tent {
                interval: v.interval,
                x: v.x,
                half,
                alpha: norm / half,
                peak,
                centre: v.witness.h.clone(),
                radius: v.witness.r,
                d: v.witness.d,
            }
        })
        .collect();
    TentPerturbation::new(tents, lambda, f.dim())
}
