use crate::error::{invariant, Error, Result};
use crate::geometry::{sup_derivative_norm, sup_norm, Bracket, Curve, Interval, IntervalSet, Knot, Point};

use super::hole::{certified_extent, HoleIntervalResult};
use super::tent::TentPerturbation;

/// Samples per straight stretch when checking pointwise identities.
const SAMPLES: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingResult {
    pub g: Curve,
    /// `η = g − f`.
    pub eta: Curve,
    /// The exception set `T`.
    pub t_set: IntervalSet,
    pub rho: f64,
    /// `ζ_k` per tent, in tent order.
    pub zetas: Vec<f64>,
    /// `(centre, radius)` of `B_k` per tent.
    pub balls: Vec<(Point, f64)>,
    pub sup_g_minus_f: Bracket,
    pub sup_dg_minus_df: Bracket,
}

/// `g = f + η` with `η′ = ξ` piecewise affine, equal to `ψ′` off `T`.
pub fn smooth(
    f: &Curve,
    psi: &TentPerturbation,
    holes: &[HoleIntervalResult],
    eps: f64,
    theta: f64,
    m: f64,
) -> Result<SmoothingResult> {
    let k_count = psi.len();
    if k_count == 0 {
        let eta = Curve::affine(Point::zero(f.dim()), Point::zero(f.dim()));
        return Ok(SmoothingResult {
            g: f.clone(),
            eta,
            t_set: IntervalSet::empty(),
            rho: 0.0,
            zetas: Vec::new(),
            balls: Vec::new(),
            sup_g_minus_f: Bracket::zero(),
            sup_dg_minus_df: Bracket::zero(),
        });
    }
    if holes.len() != k_count {
        return Err(Error::Precondition(format!(
            "{} hole intervals for {k_count} tents",
            holes.len()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("eps = {eps} must be positive")));
    }
    let s = psi.max_slope();
    let norm = psi.sup_norm();
    if !(norm < theta) {
        return Err(Error::Precondition(format!("‖ψ‖ = {norm:e} is not below θ = {theta:e}")));
    }
    let kf = k_count as f64;
    let mut rho_cap = (eps / (12.0 * kf)).min((theta - norm) / (12.0 * kf * s));
    for (tent, hole) in psi.tents().iter().zip(holes) {
        rho_cap = rho_cap
            .min(hole.r_interval.lo - tent.interval.lo)
            .min(tent.interval.hi - hole.r_interval.hi);
    }
    let rho = 0.5 * rho_cap;
    let zetas: Vec<f64> = psi
        .tents()
        .iter()
        .zip(holes)
        .map(|(tent, hole)| {
            let r = hole.radius;
            0.5 * rho
                .min(r / (12.0 * s))
                .min(tent.x - hole.r_interval.lo)
                .min(hole.r_interval.hi - tent.x)
                .min(r / (2.0 * (m + s)))
        })
        .collect();
    if !(rho > 0.0) || zetas.iter().any(|z| !(*z > 0.0)) {
        return Err(invariant("smooth", "empty smoothing window"));
    }

    let dim = f.dim();
    let zero = Point::zero(dim);
    let mut knots = vec![Knot::smooth(0.0, zero.clone(), zero.clone())];
    let mut t_pieces = Vec::new();
    let mut order: Vec<usize> = (0..k_count).collect();
    order.sort_by(|&a, &b| psi.tents()[a].interval.lo.total_cmp(&psi.tents()[b].interval.lo));
    for &k in &order {
        let tent = &psi.tents()[k];
        let zeta = zetas[k];
        let (a, b, x) = (tent.interval.lo, tent.interval.hi, tent.x);
        let v = tent.rise();
        let w = v.scale(-1.0);
        let psi_at = |t: f64| tent.peak.scale(tent.phi(t));
        let ramp = v.scale(3.0 * rho / 8.0);
        let data = [
            (a, zero.clone(), zero.clone()),
            (a + 0.5 * rho, ramp.clone(), v.scale(1.5)),
            (a + rho, psi_at(a + rho), v.clone()),
            (x - zeta, psi_at(x - zeta), v.clone()),
            (x + zeta, psi_at(x + zeta), w.clone()),
            (b - rho, psi_at(b - rho), w.clone()),
            (b - 0.5 * rho, ramp, w.scale(1.5)),
            (b, zero.clone(), zero.clone()),
        ];
        for (t, pos, d) in data {
            knots.push(Knot::smooth(t, pos, d));
        }
        t_pieces.push(Interval::of(a, a + rho));
        t_pieces.push(Interval::of(x - zeta, x + zeta));
        t_pieces.push(Interval::of(b - rho, b));
    }
    knots.push(Knot::smooth(1.0, zero.clone(), zero));
    let eta = Curve::from_knots(knots)?;
    let g = f.add(&eta)?;
    let t_set = IntervalSet::from_intervals(t_pieces);

    let result = SmoothingResult {
        sup_g_minus_f: sup_norm(&eta),
        sup_dg_minus_df: sup_derivative_norm(&eta),
        g,
        eta,
        t_set,
        rho,
        zetas,
        balls: holes.iter().map(|h| (h.centre.clone(), h.radius)).collect(),
    };
    verify(&result, f, psi, holes, eps, theta)?;
    Ok(result)
}

/// Re-checks the five smoothing conclusions.
fn verify(
    res: &SmoothingResult,
    f: &Curve,
    psi: &TentPerturbation,
    holes: &[HoleIntervalResult],
    eps: f64,
    theta: f64,
) -> Result<()> {
    let fail = |what: String| Err(invariant("smooth", what));
    if !res.g.is_c1() {
        return fail("g is not C¹".into());
    }
    if !(res.sup_g_minus_f.upper < theta) {
        return fail(format!("‖g − f‖ ≤ {:e} is not below θ = {theta:e}", res.sup_g_minus_f.upper));
    }
    let two_s = 2.0 * psi.max_slope() * (1.0 + 1e-12);
    if !(res.sup_dg_minus_df.upper <= two_s) {
        return fail(format!("‖g′ − f′‖ ≤ {:e} exceeds 2 s(ψ)", res.sup_dg_minus_df.upper));
    }
    let t_len = res.t_set.total_length();
    if !(t_len < eps) {
        return fail(format!("|T| = {t_len:e} is not below ε = {eps:e}"));
    }
    let support = IntervalSet::from_intervals(psi.tents().iter().map(|t| t.interval).collect());
    if !res.t_set.is_subset_of(&support) {
        return fail("T is not inside the tent intervals".into());
    }
    let scale = 1.0 + psi.sup_norm();
    for stretch in res.t_set.complement().iter() {
        for i in 0..=SAMPLES {
            let t = stretch.lo + stretch.len() * i as f64 / SAMPLES as f64;
            let dev = res.eta.position(t).distance(&psi.eval(t));
            if dev > 1e-12 * scale {
                return fail(format!("g ≠ f + ψ at t = {t} off T (gap {dev:e})"));
            }
        }
    }
    let mut probes: Vec<f64> = f.breakpoints();
    for gap in support.complement().iter() {
        probes.extend((0..=SAMPLES).map(|i| gap.lo + gap.len() * i as f64 / SAMPLES as f64));
    }
    for t in probes.into_iter().filter(|&t| !support.contains(t) || support.locate(t).is_none()) {
        if support.contains(t) {
            continue;
        }
        let dev = res.g.position(t).distance(&f.position(t));
        if dev > 1e-12 * (1.0 + f.position(t).norm()) {
            return fail(format!("g ≠ f at t = {t} outside the tents (gap {dev:e})"));
        }
    }
    let breaks = res.g.breakpoints();
    for (tent, hole) in psi.tents().iter().zip(holes) {
        let enc = |c: Interval| res.g.pieces()[res.g.piece_index(c.mid())].enclose(c);
        let r2 = hole.radius * hole.radius;
        let min_width = 1e-13 * hole.r_interval.len();
        let right = certified_extent(tent.x, hole.r_interval.hi, &breaks, &enc, &hole.centre, r2, min_width);
        let left = certified_extent(tent.x, hole.r_interval.lo, &breaks, &enc, &hole.centre, r2, min_width);
        if right < hole.r_interval.hi || left > hole.r_interval.lo {
            return fail(format!(
                "g leaves B_k on R_k = ({}, {}) around {}",
                hole.r_interval.lo, hole.r_interval.hi, tent.x
            ));
        }
    }
    Ok(())
}
