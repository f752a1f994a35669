//! Cylinders `F × ℝ^{d-1}` over a Cantor-type set `F`, optionally placed in
//! a window `[a, b]` of the first axis.

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Interval, IntervalSet, Point};

use super::cantor::{distance_to_set, CantorConstruction, Gap};
use super::witness::{HolePolicy, HoleWitness, PorosityMode};

/// Relative shrink applied to every hole radius.
const RADIUS_SHRINK: f64 = 1.0 - 1e-12;
/// Share of the remaining scale `eps - δ` a hole may use.
const SCALE_SHARE: f64 = 1.0 - 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    construction: CantorConstruction,
    window: Interval,
    set: IntervalSet,
}

impl Cylinder {
    pub fn new(construction: CantorConstruction, window: Interval) -> Result<Self> {
        if window.is_degenerate() {
            return Err(Error::Parameter("cylinder window must have positive length".into()));
        }
        let set = if window == Interval::UNIT {
            construction.truncated_set()
        } else {
            let pieces = construction
                .truncated_set()
                .iter()
                .map(|i| Interval::of(map_out(window, i.lo), map_out(window, i.hi)))
                .collect();
            IntervalSet::from_sorted_disjoint(pieces)
        };
        Ok(Cylinder {
            construction,
            window,
            set,
        })
    }

    pub fn construction(&self) -> &CantorConstruction {
        &self.construction
    }

    pub fn window(&self) -> Interval {
        self.window
    }

    /// The truncated base set on the first axis.
    pub fn base(&self) -> &IntervalSet {
        &self.set
    }

    pub fn contains_x(&self, x: f64) -> bool {
        self.set.contains(x)
    }

    pub fn distance_x(&self, x: f64) -> f64 {
        distance_to_set(&self.set, x)
    }

    /// Distance from `x` to the complement of the base set.
    pub fn inner_distance_x(&self, x: f64) -> f64 {
        match self.set.locate(x) {
            Some(k) => {
                let i = self.set.intervals()[k];
                (x - i.lo).min(i.hi - x)
            }
            None => 0.0,
        }
    }

    /// Smallest gap half-length at full depth, in global coordinates.
    pub fn resolution_floor(&self) -> f64 {
        let d = self.construction.depth();
        0.5 * self.construction.gap_length(d) * self.window.len()
    }

    fn levels(&self, policy: HolePolicy) -> Vec<usize> {
        let d = self.construction.depth();
        match policy {
            HolePolicy::CoarsestFirst => (0..=d).collect(),
            HolePolicy::FinestFirst => (0..=d).rev().collect(),
        }
    }

    /// Candidate gaps around `x` at `level`, nearest concentric one first.
    fn gaps_at(&self, x: f64, level: usize) -> Vec<Gap> {
        let u = map_in(self.window, x);
        let Some(cell) = self.construction.locate(u, level) else {
            return Vec::new();
        };
        let mut out = Vec::with_capacity(3);
        if let Some(g) = cell.middle_gap {
            out.push(self.gap_out(g));
        }
        let (l, r) = (self.gap_out(cell.left_gap), self.gap_out(cell.right_gap));
        if x - l.hi <= r.lo - x {
            out.extend([l, r]);
        } else {
            out.extend([r, l]);
        }
        out
    }

    fn gap_out(&self, g: Gap) -> Gap {
        let lo = if g.lo.is_finite() { map_out(self.window, g.lo) } else { g.lo };
        let hi = if g.hi.is_finite() { map_out(self.window, g.hi) } else { g.hi };
        Gap { lo, hi }
    }

    /// Best hole at each candidate gap, in search order.
    fn candidates(&self, x: &Point, eps: f64, policy: HolePolicy) -> Vec<HoleWitness> {
        let x1 = x[0];
        let mut out = Vec::new();
        for level in self.levels(policy) {
            for g in self.gaps_at(x1, level) {
                if let Some(w) = hole_in_gap(x, g, eps) {
                    out.push(w);
                }
            }
        }
        out
    }

    pub fn find_hole(
        &self,
        x: &Point,
        eps: f64,
        mode: PorosityMode,
        policy: HolePolicy,
    ) -> Result<HoleWitness> {
        if let PorosityMode::PowerP { p } = mode {
            return self.find_hole_power_p(x, eps, p);
        }
        check_scale(eps)?;
        if let Some(w) = self
            .candidates(x, eps, policy)
            .into_iter()
            .find(|w| mode.admits(w.r, w.d))
        {
            return Ok(w);
        }
        let x1 = x[0];
        if !self.contains_x(x1) && self.distance_x(x1) > 0.0 {
            return Err(Error::Precondition(format!(
                "point with first coordinate {x1} lies outside the set"
            )));
        }
        let solid = self.inner_distance_x(x1);
        if eps <= solid {
            Err(Error::Resolution(format!(
                "eps = {eps:e} is below the truncation resolution at x = {x1}: the set is solid within {solid:e}"
            )))
        } else {
            Err(Error::Resolution(format!(
                "set is not porous at x = {x1} on scale {eps:e}: no hole meets the ratio bound"
            )))
        }
    }

    /// Best ratio `r / d` over all candidate holes with `d < eps`.
    pub fn best_ratio(&self, x: &Point, eps: f64) -> Option<f64> {
        self.candidates(x, eps, HolePolicy::CoarsestFirst)
            .iter()
            .map(HoleWitness::ratio)
            .fold(None, |acc, r| Some(acc.map_or(r, |a: f64| a.max(r))))
    }

    /// Concentric-gap recipe for power-`p` porosity: the level `N` is the
    /// smallest with `2^{-(N+1)} < eps` and `N ≥ log 2 / log(2^p mu) - 1`,
    /// the hole is the level-`(N+1)` gap removed from `x`'s level-`N` piece.
    pub fn find_hole_power_p(&self, x: &Point, eps: f64, p: f64) -> Result<HoleWitness> {
        check_scale(eps)?;
        let n = power_p_level(self.construction.mu(), eps, p)?;
        let depth = self.construction.depth();
        if n + 1 > depth {
            return Err(Error::Depth {
                required: n + 1,
                available: depth,
            });
        }
        let u = map_in(self.window, x[0]);
        let cell = self.construction.locate(u, n).ok_or_else(|| {
            Error::Precondition(format!("first coordinate {} lies outside the set", x[0]))
        })?;
        let g = self.gap_out(cell.middle_gap.expect("level below depth has a middle gap"));
        let h1 = 0.5 * (g.lo + g.hi);
        let r = (h1 - g.lo).min(g.hi - h1) * RADIUS_SHRINK;
        let h = x.with_first(h1);
        let d = h.distance(x);
        if !(d > 0.0 && d < eps && r > d.powf(p)) {
            return Err(crate::error::invariant(
                "find_hole_power_p",
                format!("recipe hole r = {r:e}, d = {d:e} fails at eps = {eps:e}"),
            ));
        }
        Ok(HoleWitness { h, r, d })
    }

    /// Interval-arithmetic check that the open ball misses the base set.
    pub fn ball_is_clear(&self, h: &Point, r: f64) -> bool {
        let h1 = h[0];
        if self.set.contains(h1) {
            return false;
        }
        let v = self.set.intervals();
        let k = v.partition_point(|i| i.hi < h1);
        let rb = Bounds::point(r);
        let right_ok = k >= v.len() || rb.certainly_le(Bounds::point(v[k].lo).sub(Bounds::point(h1)));
        let left_ok = k == 0 || rb.certainly_le(Bounds::point(h1).sub(Bounds::point(v[k - 1].hi)));
        right_ok && left_ok
    }
}

/// Largest admissible hole inside gap `g` as seen from `x`.
fn hole_in_gap(x: &Point, g: Gap, eps: f64) -> Option<HoleWitness> {
    let x1 = x[0];
    let half = 0.5 * g.len();
    let (delta, toward_hi) = if x1 <= g.lo {
        (g.lo - x1, true)
    } else if x1 >= g.hi {
        (x1 - g.hi, false)
    } else {
        return None;
    };
    let r = half.min((eps - delta) * SCALE_SHARE);
    if !(r > 0.0) {
        return None;
    }
    let h1 = if toward_hi { g.lo + r } else { g.hi - r };
    let r = (h1 - g.lo).min(g.hi - h1) * RADIUS_SHRINK;
    let h = x.with_first(h1);
    let d = h.distance(x);
    (r > 0.0 && d > 0.0 && d < eps).then_some(HoleWitness { h, r, d })
}

/// Level `N` of the power-`p` recipe.
pub fn power_p_level(mu: f64, eps: f64, p: f64) -> Result<usize> {
    if !(p > 1.0) {
        return Err(Error::Parameter(format!("exponent p = {p} must exceed 1")));
    }
    let base = 2f64.powf(p) * mu;
    if !(base > 1.0) {
        return Err(Error::Parameter(format!(
            "power-p holes need 2^p·mu > 1, got 2^{p}·{mu} = {base}"
        )));
    }
    let lower = (2f64.ln() / base.ln() - 1.0).ceil().max(0.0) as usize;
    let mut n = lower;
    while 2f64.powi(-(n as i32 + 1)) >= eps {
        n += 1;
    }
    Ok(n)
}

fn check_scale(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("scale eps = {eps} must be positive")))
    }
}

fn map_in(w: Interval, x: f64) -> f64 {
    if w == Interval::UNIT {
        x
    } else {
        (x - w.lo) / w.len()
    }
}

fn map_out(w: Interval, u: f64) -> f64 {
    if w == Interval::UNIT {
        u
    } else {
        w.lo + w.len() * u
    }
}
