//! Certified sup norms of curves and their derivatives.
//!
//! The lower end of a bracket is an attained value: the largest of
//! ‖p(s)‖ over piece endpoints and the critical points of ‖p(s)‖², located
//! by sign changes of its derivative. The upper end comes from the
//! convex-hull property of the Bernstein form, refined by subdivision
//! until it meets the lower end.

use super::curve::Curve;
use super::interval::Interval;
use crate::error::Result;

const REL_TOL: f64 = 1e-12;
const ABS_TOL: f64 = 1e-15;
const MAX_SPLIT_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn zero() -> Self {
        Bracket {
            lower: 0.0,
            upper: 0.0,
        }
    }

    /// Attained value (the lower end).
    pub fn value(&self) -> f64 {
        self.lower
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn plus(self, o: Bracket) -> Bracket {
        Bracket {
            lower: self.lower + o.lower,
            upper: (self.upper + o.upper).next_up(),
        }
    }

    pub fn max(self, o: Bracket) -> Bracket {
        Bracket {
            lower: self.lower.max(o.lower),
            upper: self.upper.max(o.upper),
        }
    }

    pub fn scaled(self, s: f64) -> Bracket {
        Bracket {
            lower: self.lower * s,
            upper: self.upper * s,
        }
    }
}

fn horner(c: &[f64; 4], s: f64) -> f64 {
    c[0] + s * (c[1] + s * (c[2] + s * c[3]))
}

fn horner_d(c: &[f64; 4], s: f64) -> f64 {
    c[1] + s * (2.0 * c[2] + s * 3.0 * c[3])
}

fn norm_at(block: &[[f64; 4]], s: f64) -> f64 {
    block.iter().map(|c| horner(c, s).powi(2)).sum::<f64>().sqrt()
}

/// Half-derivative of ‖p(s)‖².
fn dq(block: &[[f64; 4]], s: f64) -> f64 {
    block.iter().map(|c| horner(c, s) * horner_d(c, s)).sum()
}

/// Largest attained value of ‖p(s)‖ on `[0, 1]` over endpoints and critical points.
fn attained_max(block: &[[f64; 4]]) -> f64 {
    const SAMPLES: usize = 48;
    let mut best = norm_at(block, 0.0).max(norm_at(block, 1.0));
    let mut prev_s = 0.0;
    let mut prev = dq(block, 0.0);
    for i in 1..=SAMPLES {
        let s = i as f64 / SAMPLES as f64;
        let cur = dq(block, s);
        best = best.max(norm_at(block, s));
        if prev > 0.0 && cur <= 0.0 {
            // descending sign change of the derivative: a local maximum
            let (mut lo, mut hi) = (prev_s, s);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if dq(block, mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            best = best.max(norm_at(block, lo)).max(norm_at(block, hi));
        }
        prev_s = s;
        prev = cur;
    }
    best
}

fn to_bernstein(c: &[f64; 4]) -> [f64; 4] {
    [
        c[0],
        c[0] + c[1] / 3.0,
        c[0] + 2.0 * c[1] / 3.0 + c[2] / 3.0,
        c[0] + c[1] + c[2] + c[3],
    ]
}

fn split(b: &[f64; 4]) -> ([f64; 4], [f64; 4]) {
    let m01 = 0.5 * (b[0] + b[1]);
    let m12 = 0.5 * (b[1] + b[2]);
    let m23 = 0.5 * (b[2] + b[3]);
    let a = 0.5 * (m01 + m12);
    let c = 0.5 * (m12 + m23);
    let mid = 0.5 * (a + c);
    ([b[0], m01, a, mid], [mid, c, m23, b[3]])
}

fn hull_bound(ctrl: &[[f64; 4]]) -> f64 {
    let mut best = 0.0f64;
    let mut mag = 0.0f64;
    for k in 0..4 {
        let n2: f64 = ctrl.iter().map(|b| b[k] * b[k]).sum();
        best = best.max(n2.sqrt());
        for b in ctrl {
            mag = mag.max(b[k].abs());
        }
    }
    // rounding slack of the conversion and subdivision arithmetic
    best + 16.0 * f64::EPSILON * mag * (ctrl.len() as f64).sqrt()
}

/// Certified bracket of `max_k sup_s ‖p_k(s)‖` over a family of cubic blocks.
fn sup_of_blocks(blocks: &[Vec<[f64; 4]>]) -> Bracket {
    if blocks.is_empty() {
        return Bracket::zero();
    }
    let lower = blocks
        .iter()
        .map(|b| attained_max(b))
        .fold(0.0f64, f64::max);
    let target = lower * (1.0 + REL_TOL) + ABS_TOL;
    let mut upper = lower;
    let mut stack: Vec<(Vec<[f64; 4]>, u32)> = blocks
        .iter()
        .map(|b| (b.iter().map(to_bernstein).collect(), 0))
        .collect();
    while let Some((ctrl, depth)) = stack.pop() {
        let bound = hull_bound(&ctrl);
        if bound <= target || depth >= MAX_SPLIT_DEPTH {
            upper = upper.max(bound);
            continue;
        }
        let (l, r): (Vec<_>, Vec<_>) = ctrl.iter().map(split).unzip();
        stack.push((l, depth + 1));
        stack.push((r, depth + 1));
    }
    Bracket {
        lower,
        upper: upper.max(lower),
    }
}

/// `sup_t ‖f(t)‖`.
pub fn sup_norm(f: &Curve) -> Bracket {
    let blocks: Vec<_> = f.pieces().iter().map(|p| p.coeffs.clone()).collect();
    sup_of_blocks(&blocks)
}

/// `sup_t ‖f′(t)‖` over the interiors of all pieces (one-sided limits at knots).
pub fn sup_derivative_norm(f: &Curve) -> Bracket {
    let blocks: Vec<_> = f.pieces().iter().map(|p| p.derivative_coeffs()).collect();
    sup_of_blocks(&blocks)
}

/// `sup ‖f′(t)‖` over `t ∈ window`.
pub fn sup_derivative_norm_on(f: &Curve, window: Interval) -> Bracket {
    let refined = f.refined(&[window.lo, window.hi]);
    let blocks: Vec<_> = refined
        .pieces()
        .iter()
        .filter(|p| p.t0 >= window.lo && p.t1 <= window.hi)
        .map(|p| p.derivative_coeffs())
        .collect();
    sup_of_blocks(&blocks)
}

/// The Γ₁ distance `sup‖f − g‖ + sup‖f′ − g′‖` as a certified bracket.
pub fn gamma1_distance(f: &Curve, g: &Curve) -> Result<Bracket> {
    let diff = f.sub(g)?;
    Ok(sup_norm(&diff).plus(sup_derivative_norm(&diff)))
}
