//! Fat Cantor cylinders against thin tubes: a power-`p`-porous set of zero
//! area that still meets every nearby curve in positive measure.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::random_bump;
use crate::error::{Error, Result};
use crate::geometry::{sup_derivative_norm, sup_derivative_norm_on, sup_norm, Curve, Interval, IntervalSet, Point};
use crate::porous::{CantorConstruction, CantorSpec, PorosityMode, PorousSetOracle};
use crate::preimage::{preimage_measure, MeasureEstimate};

/// Random curves in the tube family besides the horizontal one.
const FAMILY: usize = 4;
const WITNESS_SAMPLES: usize = 64;
const RETRIES: usize = 10;
const MIN_CELL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Tube {
    pub curve: Curve,
    pub radius: f64,
    /// Certified upper bound on the curve length.
    pub length: f64,
    /// `2 r L + π r²`.
    pub area_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TubeSet {
    pub tubes: Vec<Tube>,
    pub eps: f64,
}

impl TubeSet {
    pub fn area_bound(&self) -> f64 {
        self.tubes.iter().map(|t| t.area_bound).fold(0.0, |a, b| a + b)
    }

    /// `curve_id,radius,length,area_bound` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("curve_id,radius,length,area_bound\n");
        for (i, t) in self.tubes.iter().enumerate() {
            out.push_str(&format!("{i},{:e},{:e},{:e}\n", t.radius, t.length, t.area_bound));
        }
        out
    }

    /// Parameters where `curve` is certified inside some tube, by interval
    /// enclosure of `curve − generator` on bisected cells.
    pub fn certified_inside(&self, curve: &Curve) -> Result<IntervalSet> {
        let mut inside = IntervalSet::empty();
        for tube in &self.tubes {
            let diff = curve.sub(&tube.curve)?;
            inside = inside.union(&cells_within(&diff, tube.radius));
        }
        Ok(inside)
    }
}

fn cells_within(diff: &Curve, r: f64) -> IntervalSet {
    let r2 = r * r;
    let mut stack: Vec<(usize, Interval)> = diff
        .pieces()
        .iter()
        .enumerate()
        .map(|(k, p)| (k, Interval::of(p.t0, p.t1)))
        .collect();
    let mut accepted = Vec::new();
    while let Some((k, cell)) = stack.pop() {
        let enc = diff.pieces()[k].enclose(cell);
        let hi: f64 = enc.iter().map(|b| b.lo.abs().max(b.hi.abs()).powi(2)).sum::<f64>() * (1.0 + 1e-12);
        let lo: f64 = enc
            .iter()
            .map(|b| if b.lo > 0.0 { b.lo * b.lo } else if b.hi < 0.0 { b.hi * b.hi } else { 0.0 })
            .sum();
        if hi < r2 {
            accepted.push(cell);
        } else if lo < r2 && cell.len() > MIN_CELL {
            let m = cell.mid();
            stack.push((k, Interval::of(cell.lo, m)));
            stack.push((k, Interval::of(m, cell.hi)));
        }
    }
    IntervalSet::from_intervals(accepted)
}

/// Certified length bound `Σ width · sup‖γ′‖` per piece.
pub fn length_bound(curve: &Curve) -> f64 {
    curve
        .pieces()
        .iter()
        .map(|p| (p.t1 - p.t0) * sup_derivative_norm_on(curve, Interval::of(p.t0, p.t1)).upper)
        .sum()
}

/// Tube `n` (from 1) gets the largest radius whose area bound stays below `ε/2ⁿ`.
pub fn tube_cover(curves: &[Curve], eps: f64) -> Result<TubeSet> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("ε = {eps} must be positive")));
    }
    let mut tubes = Vec::with_capacity(curves.len());
    for (i, curve) in curves.iter().enumerate() {
        let length = length_bound(curve);
        if !length.is_finite() {
            return Err(Error::Parameter(format!("curve {i} has no finite length bound")));
        }
        let budget = eps * 0.5f64.powi(i as i32 + 1);
        // positive root of π r² + 2 L r = budget, then shrunk
        let r = budget / (length + (length * length + PI * budget).sqrt()) * (1.0 - 1e-9);
        let area_bound = 2.0 * r * length + PI * r * r;
        if !(area_bound < budget) {
            return Err(crate::error::invariant("tube_cover", format!("tube {i} area {area_bound:e} ≥ {budget:e}")));
        }
        tubes.push(Tube {
            curve: curve.clone(),
            radius: r,
            length,
            area_bound,
        });
    }
    Ok(TubeSet { tubes, eps })
}

pub fn horizontal() -> Curve {
    Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
}

/// `|ρ⁻¹(F×ℝ)|` for a curve whose first coordinate is increasing, by
/// inverting the first coordinate at every endpoint of `F`.
pub fn monotone_preimage(curve: &Curve, base: &IntervalSet, window: &IntervalSet) -> Result<f64> {
    let x = |t: f64| curve.position(t)[0];
    for p in curve.pieces() {
        let [a, b, c, _] = p.derivative_coeffs()[0];
        // Bernstein control points of the quadratic x′
        let low = a.min(a + 0.5 * b).min(a + b + c);
        if !(low > 4.0 * f64::EPSILON * (a.abs() + b.abs() + c.abs())) {
            return Err(Error::Precondition("first coordinate is not certified increasing".into()));
        }
    }
    let (x0, x1) = (x(0.0), x(1.0));
    let invert = |v: f64| -> f64 {
        if v <= x0 {
            return 0.0;
        }
        if v >= x1 {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if x(mid) < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let pre = IntervalSet::from_intervals(base.iter().map(|i| Interval::of(invert(i.lo), invert(i.hi))).collect());
    Ok(pre.intersection(window).total_length())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodReport {
    /// `(trial, delta, measure)`.
    pub rows: Vec<(usize, f64, MeasureEstimate)>,
    pub min_measure: f64,
    /// Change-of-variables lower bound for the worst trial.
    pub min_lower_bound: f64,
    /// Largest tried `δ` at which every trial had certified positive measure.
    pub passing_delta: Option<f64>,
    pub falsified: Vec<f64>,
}

impl NeighborhoodReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,delta,measure,measure_error\n");
        for (i, d, m) in &self.rows {
            out.push_str(&format!("{i},{d:e},{:e},{:e}\n", m.value, m.error_bound));
        }
        out
    }
}

/// Random C¹ curves within Γ₁ distance `delta` of `(t, 0)`, halving `delta`
/// after a trial without certified positive measure.
pub fn horizontal_neighborhood_check(
    oracle: &PorousSetOracle,
    delta: f64,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<NeighborhoodReport> {
    let base = oracle
        .base_set()
        .ok_or_else(|| Error::Precondition("the set must be a cylinder F×ℝ".into()))?;
    if !(base.total_length() > 0.0) {
        return Err(Error::Precondition("F has zero measure at this truncation".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("δ = {delta} must be positive")));
    }
    let gamma = horizontal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = delta;
    let mut falsified = Vec::new();
    for _ in 0..RETRIES {
        let mut rows = Vec::new();
        let mut min_measure = f64::INFINITY;
        let mut min_lower = f64::INFINITY;
        let mut ok = true;
        for trial in 0..trials {
            let rho = gamma.add(&random_bump(&mut rng, 2, 0.9 * d))?;
            let m = preimage_measure(&rho, oracle, tol)?.measure;
            let slope = sup_derivative_norm(&rho.sub(&gamma)?).upper;
            let span = IntervalSet::single(Interval::of(
                rho.position(0.0)[0].clamp(0.0, 1.0),
                rho.position(1.0)[0].clamp(0.0, 1.0).max(rho.position(0.0)[0].clamp(0.0, 1.0)),
            ));
            let lower = base.length_within(&span) / (1.0 + slope);
            min_measure = min_measure.min(m.value);
            min_lower = min_lower.min(lower);
            if !(m.lower() > 0.0) {
                ok = false;
            }
            rows.push((trial, d, m));
        }
        if ok {
            return Ok(NeighborhoodReport {
                rows,
                min_measure,
                min_lower_bound: min_lower,
                passing_delta: Some(d),
                falsified,
            });
        }
        log::warn!("δ = {d:e} falsified; halving");
        falsified.push(d);
        d *= 0.5;
    }
    Ok(NeighborhoodReport {
        rows: Vec::new(),
        min_measure: 0.0,
        min_lower_bound: 0.0,
        passing_delta: None,
        falsified,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub mu: f64,
    pub p: f64,
    pub depth: usize,
    pub eps: f64,
    pub tubes: TubeSet,
    /// Upper bound on `area(T) ≥ area(A)`.
    pub area_t: f64,
    /// `|C_D|` from the construction and the limit `(1 − 3μ)/(1 − 2μ)`.
    pub cantor_measure: f64,
    pub limit_measure: f64,
    pub tail_bound: f64,
    /// `|γ₁⁻¹(B)|` by bisection.
    pub preimage_b: MeasureEstimate,
    /// `|γ₁⁻¹(A)|` as `γ₁⁻¹(B) ∩ γ₁⁻¹(T)` by monotone inversion.
    pub preimage_a: MeasureEstimate,
    /// The same pair for a perturbed curve inside the tube and the neighbourhood.
    pub perturbed_b: MeasureEstimate,
    pub perturbed_a: MeasureEstimate,
    pub witnesses_checked: usize,
    pub witness_failures: usize,
}

impl CounterexampleReport {
    /// `|γ₁⁻¹(A)| = |γ₁⁻¹(B)|` within the combined error bounds, for both curves.
    pub fn identity_holds(&self) -> bool {
        self.preimage_a.agrees_with(&self.preimage_b, 0.0) && self.perturbed_a.agrees_with(&self.perturbed_b, 0.0)
    }

    pub fn to_text(&self) -> String {
        format!(
            "mu = {}\np = {}\ndepth = {}\neps = {}\ntubes = {}\narea_T <= {:e}\ncantor_measure = {:.12}\nlimit_measure = {:.12}\ntail_bound = {:e}\npreimage_B = {:.12} +- {:e}\npreimage_A = {:.12} +- {:e}\nperturbed_B = {:.12} +- {:e}\nperturbed_A = {:.12} +- {:e}\nwitnesses = {} checked, {} failed\n",
            self.mu,
            self.p,
            self.depth,
            self.eps,
            self.tubes.tubes.len(),
            self.area_t,
            self.cantor_measure,
            self.limit_measure,
            self.tail_bound,
            self.preimage_b.value,
            self.preimage_b.error_bound,
            self.preimage_a.value,
            self.preimage_a.error_bound,
            self.perturbed_b.value,
            self.perturbed_b.error_bound,
            self.perturbed_a.value,
            self.perturbed_a.error_bound,
            self.witnesses_checked,
            self.witness_failures
        )
    }
}

/// `A = B ∩ T` with `B = C_D × ℝ` and `T` a tube cover of a seeded family
/// containing `(t, 0)`.
pub fn counterexample_experiment(
    mu: f64,
    p: f64,
    depth: usize,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<CounterexampleReport> {
    if !(eps > 0.0) {
        return Err(Error::Parameter(format!("ε = {eps} must be positive")));
    }
    if !(delta > 0.0) {
        return Err(Error::Parameter(format!("δ = {delta} must be positive")));
    }
    if !(p > 1.0 && 2f64.powf(p) * mu > 1.0) {
        return Err(Error::Parameter(format!("need p > 1 and 2^p·mu > 1, got p = {p}, mu = {mu}")));
    }
    let construction = CantorConstruction::fat(CantorSpec::new(mu, depth)?)?;
    let oracle = PorousSetOracle::cylinder(construction.clone(), Interval::of(0.0, 1.0), PorosityMode::PowerP { p })?;
    let base = construction.truncated_set();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = horizontal();
    let mut family = vec![gamma.clone()];
    for _ in 0..FAMILY {
        family.push(gamma.add(&random_bump(&mut rng, 2, 1.0))?);
    }
    let tubes = tube_cover(&family, eps)?;
    let area_t = tubes.area_bound();

    let pair = |curve: &Curve| -> Result<(MeasureEstimate, MeasureEstimate)> {
        let b = preimage_measure(curve, &oracle, 1e-9)?.measure;
        let inside = tubes.certified_inside(curve)?;
        let a = monotone_preimage(curve, &base, &inside)?;
        // the uncertified remainder of [0,1] bounds what A may still gain
        let slack = 1.0 - inside.total_length();
        Ok((b, MeasureEstimate { value: a + 0.5 * slack, error_bound: 0.5 * slack + 1e-12 }))
    };
    let (preimage_b, preimage_a) = pair(&gamma)?;

    let size = 0.9 * delta.min(tubes.tubes[0].radius);
    let rho = gamma.add(&random_bump(&mut rng, 2, size))?;
    if !(sup_norm(&rho.sub(&gamma)?).upper < tubes.tubes[0].radius) {
        return Err(crate::error::invariant("counterexample", "perturbed curve left its tube"));
    }
    let (perturbed_b, perturbed_a) = pair(&rho)?;

    let mut failures = 0;
    let mut checked = 0;
    // scale 2^-j needs depth j + 1
    let levels = depth.saturating_sub(1).min(8);
    for i in 0..if levels > 0 { WITNESS_SAMPLES } else { 0 } {
        let x = Point::xy(construction.sample_point(&mut rng), 0.0);
        let scale = 0.5f64.powi((i % levels) as i32 + 1);
        checked += 1;
        let ok = oracle
            .find_hole_power_p(&x, scale, p)
            .and_then(|w| oracle.verify_witness(&x, scale, &w));
        if let Err(e) = ok {
            log::warn!("witness at {x} failed: {e}");
            failures += 1;
        }
    }

    Ok(CounterexampleReport {
        mu,
        p,
        depth,
        eps,
        tubes,
        area_t,
        cantor_measure: construction.partial_sum_measure(),
        limit_measure: construction.limit_measure(),
        tail_bound: construction.tail_bound(),
        preimage_b,
        preimage_a,
        perturbed_b,
        perturbed_a,
        witnesses_checked: checked,
        witness_failures: failures,
    })
}
