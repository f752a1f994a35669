use crate::error::{invariant, Error, Result};
use crate::geometry::{sup_derivative_norm, Bounds, Curve, Interval, Point};
use crate::porous::PorousSetOracle;

use super::tent::{Tent, TentPerturbation};

/// Radius share used when certifying that a curve stays in a ball, so the
/// certified region survives later ulp-level re-evaluation.
pub(crate) const BALL_MARGIN: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoleCase {
    /// `R` is the whole window `(x − λd/2, x + λd/2)`.
    FullHalfWidth,
    /// The image reaches the ball boundary inside the window.
    BoundaryHit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoleIntervalResult {
    /// The open interval `R_k`, stored by its endpoints.
    pub r_interval: Interval,
    pub centre: Point,
    pub radius: f64,
    pub case: HoleCase,
    /// `|R_k| / |I_k|`.
    pub ratio: f64,
}

/// Scans outward from `from` toward `to`, returning how far the enclosure
/// certifies `‖γ(t) − centre‖² < r2`. Cells never straddle `breaks`.
pub(crate) fn certified_extent(
    from: f64,
    to: f64,
    breaks: &[f64],
    enclose: &dyn Fn(Interval) -> Vec<Bounds>,
    centre: &Point,
    r2: f64,
    min_width: f64,
) -> f64 {
    let (lo, hi) = (from.min(to), from.max(to));
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&b| b > lo && b < hi).collect();
    cuts.push(lo);
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut segs: Vec<Interval> = cuts.windows(2).map(|w| Interval::of(w[0], w[1])).collect();
    let forward = to >= from;
    if forward {
        segs.reverse();
    }
    // Stack top is the cell nearest to `from`.
    let mut stack = segs;
    let mut reached = from;
    let r2b = Bounds::point(r2);
    while let Some(c) = stack.pop() {
        let e = enclose(c);
        let dist2 = e
            .iter()
            .zip(centre.coords())
            .fold(Bounds::point(0.0), |acc, (b, &h)| acc.add(b.sub(Bounds::point(h)).sqr()));
        if dist2.certainly_lt(r2b) {
            reached = if forward { c.hi } else { c.lo };
            continue;
        }
        let m = c.mid();
        if c.len() <= min_width || m <= c.lo || m >= c.hi {
            return reached;
        }
        let (near, far) = if forward {
            (Interval::of(c.lo, m), Interval::of(m, c.hi))
        } else {
            (Interval::of(m, c.hi), Interval::of(c.lo, m))
        };
        stack.push(far);
        stack.push(near);
    }
    reached
}

/// Enclosure of `f + ψ` on a cell lying on one side of the tent peak.
fn enclose_f_plus_tent(f: &Curve, tent: &Tent, c: Interval) -> Vec<Bounds> {
    let piece = &f.pieces()[f.piece_index(c.mid())];
    let x = Bounds::point(tent.x);
    let (near, far) = if c.lo >= tent.x {
        (Bounds::point(c.lo).sub(x), Bounds::point(c.hi).sub(x))
    } else {
        (x.sub(Bounds::point(c.hi)), x.sub(Bounds::point(c.lo)))
    };
    let dist = Bounds::new(near.lo.max(0.0), far.hi.max(0.0));
    let inv = 1.0 / tent.half;
    let phi = Bounds::point(1.0).sub(dist.mul(Bounds::new(inv.next_down(), inv.next_up())));
    let phi = Bounds::new(phi.lo.clamp(0.0, 1.0), phi.hi.clamp(0.0, 1.0));
    piece
        .enclose(c)
        .into_iter()
        .zip(tent.peak.coords())
        .map(|(b, &p)| b.add(phi.mul(Bounds::point(p))))
        .collect()
}

/// `R_k`: the component of `(f+ψ)⁻¹(B(h, r))` around `x_k`, clipped to
/// `(x_k − λd/2, x_k + λd/2)`, with the `|R| ≥ (Q/λ)|I|` bound checked.
pub fn hole_interval(
    f: &Curve,
    psi: &TentPerturbation,
    k: usize,
    oracle: &PorousSetOracle,
    m: f64,
) -> Result<HoleIntervalResult> {
    let tent = psi
        .tents()
        .get(k)
        .ok_or_else(|| Error::Precondition(format!("no tent with index {k}")))?;
    let c = oracle
        .mode()
        .c()
        .ok_or_else(|| Error::Parameter("hole intervals need a c-porous oracle".into()))?;
    let speed = sup_derivative_norm(f);
    if speed.lower > m {
        return Err(Error::Precondition(format!("‖f′‖ ≥ {} exceeds M = {m}", speed.lower)));
    }
    hole_interval_with(f, tent, psi.lambda(), c, m)
}

pub(crate) fn hole_interval_with(f: &Curve, tent: &Tent, lambda: f64, c: f64, m: f64) -> Result<HoleIntervalResult> {
    let window = 0.5 * tent.half;
    let breaks = f.breakpoints();
    let r2 = tent.radius * tent.radius * BALL_MARGIN;
    let min_width = 1e-13 * tent.half;
    let enc = |cell: Interval| enclose_f_plus_tent(f, tent, cell);
    let right = certified_extent(tent.x, tent.x + window, &breaks, &enc, &tent.centre, r2, min_width);
    let left = certified_extent(tent.x, tent.x - window, &breaks, &enc, &tent.centre, r2, min_width);
    let full = right >= tent.x + window && left <= tent.x - window;
    let r_interval = Interval::of(left, right);
    let q = c / (4.0 * m);
    let i_len = tent.interval.len();
    let ratio = r_interval.len() / i_len;
    if !(r_interval.len() >= q / lambda * i_len) {
        return Err(invariant(
            "hole_interval",
            format!(
                "|R| = {:e} below (Q/λ)|I| = {:e} for the tent at {}",
                r_interval.len(),
                q / lambda * i_len,
                tent.x
            ),
        ));
    }
    Ok(HoleIntervalResult {
        r_interval,
        centre: tent.centre.clone(),
        radius: tent.radius,
        case: if full {
            HoleCase::FullHalfWidth
        } else {
            HoleCase::BoundaryHit
        },
        ratio,
    })
}
