//! Porous sets with exact hole oracles: Cantor-type cylinders, rasterized
//! sets and finite unions of those.

mod cantor;
mod cylinder;
mod raster;
mod witness;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use cantor::{CantorConstruction, CantorKind, CantorSpec, Gap, LevelCell};
pub(crate) use cantor::distance_to_set;
pub use cylinder::{power_p_level, Cylinder};
pub use raster::Raster;
pub use witness::{HolePolicy, HoleWitness, Membership, PorosityMode};


use crate::error::{invariant, Error, Result};
use crate::geometry::{Bounds, Interval, IntervalSet, Point};

/// Truncated depth-`D` fat Cantor set.
pub fn build_fat_cantor(spec: CantorSpec) -> Result<IntervalSet> {
    Ok(CantorConstruction::fat(spec)?.truncated_set())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Cylinder(Cylinder),
    Rasterized(Raster),
    Union(Vec<PorousSetOracle>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PorousSetOracle {
    shape: Shape,
    mode: PorosityMode,
    policy: HolePolicy,
}

impl PorousSetOracle {
    pub fn new(shape: Shape, mode: PorosityMode) -> Result<Self> {
        match mode {
            PorosityMode::CPorous { c } if !(c > 0.0 && c < 1.0) => {
                return Err(Error::Parameter(format!("porosity constant c = {c} must lie in (0, 1)")))
            }
            PorosityMode::PowerP { p } if !(p > 1.0) => {
                return Err(Error::Parameter(format!("exponent p = {p} must exceed 1")))
            }
            _ => {}
        }
        Ok(PorousSetOracle {
            shape,
            mode,
            policy: HolePolicy::default(),
        })
    }

    /// `C × ℝ` for the fat Cantor set of `spec`.
    pub fn fat_cantor_product(spec: CantorSpec, c: f64) -> Result<Self> {
        let cyl = Cylinder::new(CantorConstruction::fat(spec)?, Interval::UNIT)?;
        Self::new(Shape::Cylinder(cyl), PorosityMode::CPorous { c })
    }

    /// Middle-thirds set times `ℝ`.
    pub fn ternary_product(depth: usize, c: f64) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Parameter("depth must be positive".into()));
        }
        let cyl = Cylinder::new(CantorConstruction::ternary(depth), Interval::UNIT)?;
        Self::new(Shape::Cylinder(cyl), PorosityMode::CPorous { c })
    }

    pub fn cylinder(construction: CantorConstruction, window: Interval, mode: PorosityMode) -> Result<Self> {
        Self::new(Shape::Cylinder(Cylinder::new(construction, window)?), mode)
    }

    pub fn rasterized(raster: Raster, c: f64) -> Result<Self> {
        Self::new(Shape::Rasterized(raster), PorosityMode::CPorous { c })
    }

    pub fn union(members: Vec<PorousSetOracle>, c: f64) -> Result<Self> {
        Self::new(Shape::Union(members), PorosityMode::CPorous { c })
    }

    pub fn with_mode(mut self, mode: PorosityMode) -> Result<Self> {
        self = Self::new(self.shape, mode)?.with_policy(self.policy);
        Ok(self)
    }

    pub fn with_policy(mut self, policy: HolePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mode(&self) -> PorosityMode {
        self.mode
    }

    pub fn policy(&self) -> HolePolicy {
        self.policy
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.shape {
            Shape::Cylinder(c) => match c.construction().kind() {
                CantorKind::Fat { .. } => "fat-cantor-product",
                CantorKind::Ternary => "ternary-product",
            },
            Shape::Rasterized(_) => "rasterized",
            Shape::Union(_) => "finite-union",
        }
    }

    /// Base interval set when the oracle is a single cylinder.
    pub fn as_cylinder(&self) -> Option<&Cylinder> {
        match &self.shape {
            Shape::Cylinder(c) => Some(c),
            _ => None,
        }
    }

    /// First-axis base set when the oracle is a cylinder or a union of
    /// cylinders.
    pub fn base_set(&self) -> Option<IntervalSet> {
        match &self.shape {
            Shape::Cylinder(c) => Some(c.base().clone()),
            Shape::Rasterized(_) => None,
            Shape::Union(ms) => ms
                .iter()
                .try_fold(IntervalSet::empty(), |acc, m| Some(acc.union(&m.base_set()?))),
        }
    }

    /// Exact closed-set membership at the truncation depth.
    pub fn contains_point(&self, pt: &Point) -> bool {
        match &self.shape {
            Shape::Cylinder(c) => c.contains_x(pt[0]),
            Shape::Rasterized(r) => r.contains(pt),
            Shape::Union(ms) => ms.iter().any(|m| m.contains_point(pt)),
        }
    }

    pub fn contains(&self, pt: &Point, resolution: f64) -> Membership {
        if self.contains_point(pt) {
            Membership::Inside
        } else if self.distance(pt) > resolution {
            Membership::Outside
        } else {
            Membership::Unknown
        }
    }

    /// Distance from `pt` to the truncated set.
    pub fn distance(&self, pt: &Point) -> f64 {
        match &self.shape {
            Shape::Cylinder(c) => c.distance_x(pt[0]),
            Shape::Rasterized(r) => r.distance(pt),
            Shape::Union(ms) => ms.iter().map(|m| m.distance(pt)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Radius of a ball around `pt` certainly inside the set (0 outside).
    pub fn inner_distance(&self, pt: &Point) -> f64 {
        match &self.shape {
            Shape::Cylinder(c) => c.inner_distance_x(pt[0]),
            Shape::Rasterized(r) => r.inner_distance(pt),
            Shape::Union(ms) => ms.iter().map(|m| m.inner_distance(pt)).fold(0.0, f64::max),
        }
    }

    pub fn resolution_floor(&self) -> f64 {
        match &self.shape {
            Shape::Cylinder(c) => c.resolution_floor(),
            Shape::Rasterized(r) => r.resolution_floor(),
            Shape::Union(ms) => ms.iter().map(|m| m.resolution_floor()).fold(f64::INFINITY, f64::min),
        }
    }

    /// A hole `B(h, r)` missing the set with `d = ‖h − x‖ < eps` and the
    /// mode inequality.
    pub fn find_hole(&self, x: &Point, eps: f64) -> Result<HoleWitness> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Parameter(format!("scale eps = {eps} must be positive")));
        }
        let w = match &self.shape {
            Shape::Cylinder(c) => c.find_hole(x, eps, self.mode, self.policy)?,
            Shape::Rasterized(r) => r.find_hole(x, eps, self.mode, self.policy)?,
            Shape::Union(ms) => self.union_hole(ms, x, eps)?,
        };
        self.verify_witness(x, eps, &w)?;
        Ok(w)
    }

    /// Power-`p` recipe hole; only single Cantor cylinders support it.
    pub fn find_hole_power_p(&self, x: &Point, eps: f64, p: f64) -> Result<HoleWitness> {
        let c = self
            .as_cylinder()
            .ok_or_else(|| Error::Parameter("power-p holes need a Cantor cylinder".into()))?;
        c.find_hole_power_p(x, eps, p)
    }

    /// A member's hole, shrunk to clear the other members, at successively
    /// halved scales.
    fn union_hole(&self, ms: &[PorousSetOracle], x: &Point, eps: f64) -> Result<HoleWitness> {
        let Some(home) = ms
            .iter()
            .enumerate()
            .map(|(k, m)| (k, m.distance(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return Err(Error::Precondition("empty union has no points".into()));
        };
        let member = &ms[home.0];
        let mut scale = eps;
        let mut last_err = None;
        for _ in 0..16 {
            match member.find_hole(x, scale) {
                Ok(mut w) => {
                    let clearance = ms
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != home.0)
                        .map(|(_, m)| m.distance(&w.h))
                        .fold(f64::INFINITY, f64::min);
                    w.r = w.r.min(clearance * (1.0 - 1e-12));
                    if w.r > 0.0 && self.mode.admits(w.r, w.d) {
                        return Ok(w);
                    }
                }
                Err(e) => last_err = Some(e),
            }
            scale *= 0.5;
        }
        Err(last_err.unwrap_or_else(|| {
            Error::Resolution(format!("no hole clears the other union members at scale {eps:e}"))
        }))
    }

    fn ball_is_clear(&self, h: &Point, r: f64) -> bool {
        match &self.shape {
            Shape::Cylinder(c) => c.ball_is_clear(h, r),
            Shape::Rasterized(g) => g.ball_is_clear(h, r),
            Shape::Union(ms) => ms.iter().all(|m| m.ball_is_clear(h, r)),
        }
    }

    /// Re-checks a witness with outward-rounded arithmetic: the ball misses
    /// the truncated set, `d < eps` and the mode inequality holds.
    pub fn verify_witness(&self, x: &Point, eps: f64, w: &HoleWitness) -> Result<()> {
        if !(w.r > 0.0 && w.d > 0.0) {
            return Err(invariant("verify_witness", format!("non-positive r = {} or d = {}", w.r, w.d)));
        }
        if !self.ball_is_clear(&w.h, w.r) {
            return Err(invariant("verify_witness", format!("ball B({}, {:e}) meets the set", w.h, w.r)));
        }
        let diff: Vec<Bounds> = w
            .h
            .coords()
            .iter()
            .zip(x.coords())
            .map(|(&a, &b)| Bounds::point(a).sub(Bounds::point(b)))
            .collect();
        let d = Bounds::norm(&diff);
        if !d.certainly_lt(Bounds::point(eps)) {
            return Err(invariant("verify_witness", format!("d = {:e} not below eps = {eps:e}", w.d)));
        }
        let r = Bounds::point(w.r);
        let ok = match self.mode {
            PorosityMode::CPorous { c } => Bounds::point(c).mul(d).certainly_lt(r),
            PorosityMode::PowerP { p } => d.powf(p).certainly_lt(r),
        };
        if !ok {
            return Err(invariant(
                "verify_witness",
                format!("mode inequality fails for r = {:e}, d = {:e}", w.r, w.d),
            ));
        }
        Ok(())
    }

    /// Best `r / d` over the oracle's candidate holes with `d < eps`.
    pub fn best_ratio(&self, x: &Point, eps: f64) -> Option<f64> {
        match &self.shape {
            Shape::Cylinder(c) => c.best_ratio(x, eps),
            Shape::Rasterized(r) => r.best_ratio(x, eps),
            Shape::Union(ms) => {
                let k = ms
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.distance(x).total_cmp(&b.1.distance(x)))?
                    .0;
                ms[k].best_ratio(x, eps)
            }
        }
    }

    pub fn sample_point<R: rand::Rng>(&self, rng: &mut R, dim: usize) -> Option<Point> {
        match &self.shape {
            Shape::Cylinder(c) => {
                let u = c.construction().sample_point(rng);
                let w = c.window();
                let x = if w == Interval::UNIT { u } else { w.lo + w.len() * u };
                Some(Point::zero(dim).with_first(x))
            }
            Shape::Rasterized(r) => r.sample_point(rng, dim),
            Shape::Union(ms) => {
                if ms.is_empty() {
                    return None;
                }
                ms[rng.gen_range(0..ms.len())].sample_point(rng, dim)
            }
        }
    }

    /// Infimum over sampled points and scales of the best achieved `r / d`.
    /// Pairs with no hole at all (below resolution) are skipped. An empty
    /// sample yields 1.
    pub fn estimate_porosity_constant(&self, sample_count: usize, scales: &[f64], seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut inf = f64::INFINITY;
        let mut skipped = 0usize;
        for _ in 0..sample_count {
            let Some(x) = self.sample_point(&mut rng, 2) else { break };
            for &eps in scales {
                match self.best_ratio(&x, eps) {
                    Some(r) => inf = inf.min(r),
                    None => skipped += 1,
                }
            }
        }
        if skipped > 0 {
            log::warn!("porosity estimate skipped {skipped} (point, scale) pairs below resolution");
        }
        if inf.is_infinite() {
            log::warn!("porosity estimate over an empty sample; returning 1");
            return 1.0;
        }
        inf
    }
}
