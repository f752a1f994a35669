//! Sets given as filled closed cells of a square grid in the first two
//! coordinates, extended by all reals in the remaining ones.

use crate::error::{Error, Result};
use crate::geometry::{Bounds, Point};

use super::witness::{HolePolicy, HoleWitness, PorosityMode};

const RADIUS_SHRINK: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    origin: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    filled: Vec<bool>,
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Rect {
    fn distance(&self, p: [f64; 2]) -> f64 {
        let dx = (self.lo[0] - p[0]).max(p[0] - self.hi[0]).max(0.0);
        let dy = (self.lo[1] - p[1]).max(p[1] - self.hi[1]).max(0.0);
        dx.hypot(dy)
    }

    fn contains(&self, p: [f64; 2]) -> bool {
        (self.lo[0]..=self.hi[0]).contains(&p[0]) && (self.lo[1]..=self.hi[1]).contains(&p[1])
    }

    /// Enclosure of the squared distance from `p`.
    fn distance_sq_bounds(&self, p: [f64; 2]) -> Bounds {
        let axis = |k: usize| {
            let below = Bounds::point(self.lo[k]).sub(Bounds::point(p[k]));
            let above = Bounds::point(p[k]).sub(Bounds::point(self.hi[k]));
            let gap = Bounds::new(below.lo.max(above.lo).max(0.0), below.hi.max(above.hi).max(0.0));
            gap.sqr()
        };
        axis(0).add(axis(1))
    }
}

impl Raster {
    /// `filled` is row-major with `nx` cells per row.
    pub fn new(origin: [f64; 2], cell: f64, nx: usize, ny: usize, filled: Vec<bool>) -> Result<Self> {
        if !(cell > 0.0 && cell.is_finite()) || !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("raster needs finite origin and positive cell size".into()));
        }
        if nx == 0 || ny == 0 || filled.len() != nx * ny {
            return Err(Error::Parameter(format!(
                "raster of {nx}x{ny} cells needs {} flags, got {}",
                nx * ny,
                filled.len()
            )));
        }
        Ok(Raster {
            origin,
            cell,
            nx,
            ny,
            filled,
        })
    }

    pub fn from_fn(
        origin: [f64; 2],
        cell: f64,
        nx: usize,
        ny: usize,
        f: impl Fn(usize, usize) -> bool,
    ) -> Result<Self> {
        let filled = (0..ny).flat_map(|j| (0..nx).map(move |i| (i, j))).map(|(i, j)| f(i, j)).collect();
        Raster::new(origin, cell, nx, ny, filled)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn filled_count(&self) -> usize {
        self.filled.iter().filter(|&&b| b).count()
    }

    fn rect(&self, i: i64, j: i64) -> Rect {
        let lo = [
            self.origin[0] + i as f64 * self.cell,
            self.origin[1] + j as f64 * self.cell,
        ];
        Rect {
            lo,
            hi: [lo[0] + self.cell, lo[1] + self.cell],
        }
    }

    fn is_filled(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.filled[j as usize * self.nx + i as usize]
    }

    fn filled_rects(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.ny as i64)
            .flat_map(move |j| (0..self.nx as i64).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_filled(i, j))
            .map(|(i, j)| self.rect(i, j))
    }

    /// Empty cells of the grid plus a one-cell frame around it.
    fn empty_cells(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        (-1..=self.ny as i64)
            .flat_map(move |j| (-1..=self.nx as i64).map(move |i| (i, j)))
            .filter(|&(i, j)| !self.is_filled(i, j))
    }

    pub fn contains(&self, p: &Point) -> bool {
        let q = [p[0], p[1]];
        self.filled_rects().any(|r| r.contains(q))
    }

    pub fn distance(&self, p: &Point) -> f64 {
        let q = [p[0], p[1]];
        self.filled_rects().map(|r| r.distance(q)).fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the complement of the set.
    pub fn inner_distance(&self, p: &Point) -> f64 {
        if !self.contains(p) {
            return 0.0;
        }
        let q = [p[0], p[1]];
        self.empty_cells()
            .map(|(i, j)| self.rect(i, j).distance(q))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn resolution_floor(&self) -> f64 {
        0.5 * self.cell
    }

    fn candidates(&self, x: &Point, eps: f64) -> Vec<HoleWitness> {
        let mut out: Vec<HoleWitness> = self
            .empty_cells()
            .filter_map(|(i, j)| {
                let c = self.rect(i, j);
                let centre = [0.5 * (c.lo[0] + c.hi[0]), 0.5 * (c.lo[1] + c.hi[1])];
                let mut coords = x.coords().to_vec();
                coords[0] = centre[0];
                coords[1] = centre[1];
                let h = Point::from_vec(coords);
                let d = h.distance(x);
                let r = self.distance(&h) * RADIUS_SHRINK;
                (d > 0.0 && d < eps && r > 0.0).then_some(HoleWitness { h, r, d })
            })
            .collect();
        out.sort_by(|a, b| a.d.total_cmp(&b.d));
        out
    }

    pub fn find_hole(
        &self,
        x: &Point,
        eps: f64,
        mode: PorosityMode,
        policy: HolePolicy,
    ) -> Result<HoleWitness> {
        let PorosityMode::CPorous { .. } = mode else {
            return Err(Error::Parameter("rasterized sets support c-porous holes only".into()));
        };
        let mut cands = self.candidates(x, eps);
        if policy == HolePolicy::CoarsestFirst {
            cands.sort_by(|a, b| b.r.total_cmp(&a.r));
        }
        if let Some(w) = cands.into_iter().find(|w| mode.admits(w.r, w.d)) {
            return Ok(w);
        }
        let solid = self.inner_distance(x);
        if eps <= solid.max(self.resolution_floor()) {
            Err(Error::Resolution(format!(
                "eps = {eps:e} is below the raster resolution {:e}",
                self.cell
            )))
        } else {
            Err(Error::Resolution(format!(
                "raster is not porous at this point on scale {eps:e}"
            )))
        }
    }

    pub fn best_ratio(&self, x: &Point, eps: f64) -> Option<f64> {
        self.candidates(x, eps).iter().map(HoleWitness::ratio).reduce(f64::max)
    }

    pub fn ball_is_clear(&self, h: &Point, r: f64) -> bool {
        let q = [h[0], h[1]];
        let r2 = Bounds::point(r).sqr();
        self.filled_rects().all(|c| r2.certainly_le(c.distance_sq_bounds(q)))
    }

    /// Uniform point of a uniformly chosen filled cell.
    pub fn sample_point<R: rand::Rng>(&self, rng: &mut R, dim: usize) -> Option<Point> {
        let cells: Vec<Rect> = self.filled_rects().collect();
        if cells.is_empty() {
            return None;
        }
        let c = cells[rng.gen_range(0..cells.len())];
        let mut coords = vec![0.0; dim];
        coords[0] = rng.gen_range(c.lo[0]..=c.hi[0]);
        coords[1] = rng.gen_range(c.lo[1]..=c.hi[1]);
        Some(Point::from_vec(coords))
    }
}
