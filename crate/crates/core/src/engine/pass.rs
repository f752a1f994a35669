use crate::error::{invariant, Error, Result};
use crate::geometry::{gamma1_distance, sup_derivative_norm_on, sup_norm, Bracket, Curve, IntervalSet};
use crate::perturbation::{build_tent, hole_interval, smooth, HoleIntervalResult, SmoothingResult, TentPerturbation};
use crate::porous::PorousSetOracle;
use crate::preimage::{preimage_measure, preimage_measure_on, MeasureEstimate};
use crate::vitali::{select_disjoint_cover, truncate_cover, CoverSelection};

use super::adversary::Adversary;
use super::params::EngineParams;

/// Slack for set identities that hold up to measure zero.
pub(crate) const NULL_SLACK: f64 = 1e-12;
const DELTA_SHRINK: f64 = 1.0 - 1.0 / 1024.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingSet {
    pub c_set: IntervalSet,
    /// Cover indices dropped into `C_n`.
    pub flagged: Vec<usize>,
    /// Cover indices kept, in their original order: the relabeled prefix.
    pub survivors: Vec<usize>,
}

impl StoppingSet {
    pub fn l(&self) -> usize {
        self.survivors.len()
    }
}

/// `I_k` joins `C_n` when `sup_{I_k} ‖f_n′ + ψ̃′ − f₁′‖ ≥ σ/4` (certified upper end).
pub fn stopping_set(f_n: &Curve, psi_tilde: &TentPerturbation, f1: &Curve, sigma: f64) -> Result<StoppingSet> {
    let drift = f_n.sub(f1)?.add(&psi_tilde.as_curve())?;
    let mut flagged = Vec::new();
    let mut survivors = Vec::new();
    for (k, tent) in psi_tilde.tents().iter().enumerate() {
        if sup_derivative_norm_on(&drift, tent.interval).upper >= sigma / 4.0 {
            flagged.push(k);
        } else {
            survivors.push(k);
        }
    }
    let c_set = IntervalSet::from_intervals(flagged.iter().map(|&k| psi_tilde.tents()[k].interval).collect());
    Ok(StoppingSet {
        c_set,
        flagged,
        survivors,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub round: usize,
    /// `|f_{n+1}⁻¹(E)|`.
    pub measure: f64,
    pub measure_error: f64,
    pub covered_len: f64,
    pub hole_len: f64,
    pub c_len: f64,
    pub t_len: f64,
    pub delta: f64,
    pub theta: f64,
    /// Right side of the aggregate bound after this round.
    pub bound_rhs: f64,
}

impl AuditRow {
    pub const CSV_HEADER: &'static str =
        "round,measure,measure_error,covered_len,hole_len,C_len,T_len,delta,theta,bound_rhs";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.round,
            self.measure,
            self.measure_error,
            self.covered_len,
            self.hole_len,
            self.c_len,
            self.t_len,
            self.delta,
            self.theta,
            self.bound_rhs
        )
    }
}

/// Everything one pass produced.
#[derive(Debug, Clone)]
pub struct RoundRecord {
    pub n: usize,
    pub theta: f64,
    pub delta: f64,
    /// Selected cover truncated to `K_n` intervals.
    pub cover: CoverSelection,
    pub k: usize,
    pub stopping: StoppingSet,
    /// `φ_n`.
    pub phi: TentPerturbation,
    pub holes: Vec<HoleIntervalResult>,
    pub smoothing: SmoothingResult,
    pub s_set: IntervalSet,
    pub a_set: IntervalSet,
    pub f_set: IntervalSet,
    /// `|g_n⁻¹(E)|`.
    pub g_measure: MeasureEstimate,
    /// `|f_{n+1}⁻¹(E)|`.
    pub next_measure: MeasureEstimate,
    /// `|g_n⁻¹(E) ∩ ⋃_{k≤L} I_k|` against `(1 − Q/λ)Σ|I_k| + |T_n|`.
    pub reduction: (MeasureEstimate, f64),
    /// `‖g_n − f₁‖` and the Γ₁ distance `g_n` to `f₁`.
    pub sup_to_f1: Bracket,
    pub gamma1_to_f1: Bracket,
}

impl RoundRecord {
    pub fn g(&self) -> &Curve {
        &self.smoothing.g
    }

    pub fn t_set(&self) -> &IntervalSet {
        &self.smoothing.t_set
    }

    pub fn reduction_holds(&self) -> bool {
        self.reduction.0.lower() <= self.reduction.1
    }
}

#[derive(Debug, Clone)]
pub struct PassState {
    pub f1: Curve,
    /// `f_n` for the next round.
    pub f: Curve,
    pub initial: MeasureEstimate,
    pub rounds: Vec<RoundRecord>,
    pub audit: Vec<AuditRow>,
    /// `δ_{n−1}`; `δ_0 = 1`.
    pub delta: f64,
    pub seed: u64,
    /// Tolerance of every preimage estimate.
    pub tol: f64,
}

impl PassState {
    pub fn new(f1: Curve, oracle: &PorousSetOracle, seed: u64, tol: f64) -> Result<Self> {
        let initial = preimage_measure(&f1, oracle, tol)?.measure;
        Ok(PassState {
            f: f1.clone(),
            f1,
            initial,
            rounds: Vec::new(),
            audit: Vec::new(),
            delta: 1.0,
            seed,
            tol,
        })
    }

    /// Index of the next round (starting at 1).
    pub fn n(&self) -> usize {
        self.rounds.len() + 1
    }

    pub fn f_sets(&self) -> impl Iterator<Item = &IntervalSet> {
        self.rounds.iter().map(|r| &r.f_set)
    }

    pub fn c_sets(&self) -> impl Iterator<Item = &IntervalSet> {
        self.rounds.iter().map(|r| &r.stopping.c_set)
    }

    pub fn increments(&self) -> impl Iterator<Item = &TentPerturbation> {
        self.rounds.iter().map(|r| &r.phi)
    }

    pub fn f_union(&self) -> IntervalSet {
        self.f_sets().fold(IntervalSet::empty(), |acc, s| acc.union(s))
    }

    pub fn c_total(&self) -> f64 {
        self.c_sets().map(IntervalSet::total_length).fold(0.0, |a, b| a + b)
    }

    /// Current measure `|f_n⁻¹(E)|`.
    pub fn current_measure(&self) -> MeasureEstimate {
        self.rounds.last().map_or(self.initial, |r| r.next_measure)
    }

    /// `(1 − Q/λ)ⁿ|f₁⁻¹(E)| + Σ|C_i| + 8 Σ_{i≤n} ε/2^i`.
    pub fn aggregate_bound(&self, params: &EngineParams) -> f64 {
        let n = self.rounds.len();
        let geometric: f64 = (0..=n).map(|i| params.eps_at(i)).sum();
        params.round_factor().powi(n as i32) * self.initial.upper() + self.c_total() + 8.0 * geometric
    }

    pub fn audit_csv(&self) -> String {
        let mut out = String::from(AuditRow::CSV_HEADER);
        out.push('\n');
        for row in &self.audit {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}

/// One pass of the measure-reduction algorithm.
pub fn run_pass(
    mut state: PassState,
    params: &EngineParams,
    oracle: &PorousSetOracle,
    adversary: &Adversary,
) -> Result<PassState> {
    let n = state.n();
    let eps_n = params.eps_at(n);
    let sigma = params.sigma;
    let c = oracle
        .mode()
        .c()
        .ok_or_else(|| Error::Parameter("the engine needs a c-porous oracle".into()))?;
    if (c - params.c).abs() > 0.0 {
        return Err(Error::Parameter(format!("oracle c = {c} differs from the parameter c = {}", params.c)));
    }

    // step 1
    let drift = sup_norm(&state.f.sub(&state.f1)?);
    let theta = 0.5 * (sigma / 4.0 - drift.upper);
    if !(theta > 0.0) {
        return Err(invariant("step 1", format!("‖f_n − f₁‖ ≤ {:e} leaves no room below σ/4", drift.upper)));
    }
    let excluded = state.f_union();

    // step 2
    let seed = state.seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    let full = select_disjoint_cover(&state.f, oracle, params.lambda, theta, &excluded, eps_n, seed)?;
    let (cover, k) = truncate_cover(&full, eps_n);
    for v in &cover.chosen {
        if excluded.iter().any(|e| e.meets(&v.interval)) {
            return Err(invariant("step 2", format!("interval at {} meets an earlier F_i", v.x)));
        }
    }

    // steps 3-5
    let psi_tilde = build_tent(&state.f, &cover, k, params.lambda)?;
    let stopping = stopping_set(&state.f, &psi_tilde, &state.f1, sigma)?;
    let survivors = stopping.survivors.clone();
    let phi = psi_tilde.filtered(|i| survivors.contains(&i));

    // step 6
    let holes = (0..phi.len())
        .map(|k| hole_interval(&state.f, &phi, k, oracle, params.m))
        .collect::<Result<Vec<_>>>()?;

    // step 7
    let smoothing = smooth(&state.f, &phi, &holes, eps_n, theta, params.m)?;
    if !(smoothing.t_set.total_length() <= eps_n) {
        return Err(invariant("step 7", "|T_n| exceeds ε/2ⁿ"));
    }
    let i_set = IntervalSet::from_intervals(phi.tents().iter().map(|t| t.interval).collect());
    let s_set = IntervalSet::from_intervals(holes.iter().map(|h| h.r_interval).collect());
    let a_set = IntervalSet::unit().difference(&i_set.union(&stopping.c_set).union(&excluded));

    // step 8
    let f_set = s_set.union(&a_set).union(&smoothing.t_set).union(&stopping.c_set);
    for (i, earlier) in state.f_sets().enumerate() {
        if earlier.intersection(&f_set).total_length() > NULL_SLACK {
            return Err(invariant("step 8", format!("F_{n} overlaps F_{} in positive measure", i + 1)));
        }
    }
    let mut cover_all = excluded.union(&f_set);
    for (t, h) in phi.tents().iter().zip(&holes) {
        cover_all = cover_all.union(&IntervalSet::single(t.interval).difference(&IntervalSet::single(h.r_interval)));
    }
    if cover_all.total_length() < 1.0 - NULL_SLACK {
        return Err(invariant("step 8", format!("partition covers only {}", cover_all.total_length())));
    }

    let g = &smoothing.g;
    let sup_to_f1 = sup_norm(&g.sub(&state.f1)?);
    let gamma1_to_f1 = gamma1_distance(g, &state.f1)?;
    if !(sup_to_f1.upper < sigma / 4.0 && gamma1_to_f1.upper < sigma) {
        return Err(invariant("step 7", "g_n left B(f₁, σ) or drifted past σ/4"));
    }

    // step 9
    let mut delta = (state.delta / 2.0).min(sigma / 2f64.powi(n as i32 + 3)) * DELTA_SHRINK;
    let mut tries = 0;
    while !(gamma1_to_f1.upper + delta < sigma && sup_to_f1.upper + delta < sigma / 4.0) {
        delta *= 0.5;
        tries += 1;
        if tries > 64 {
            return Err(invariant("step 9", "no admissible δ_n"));
        }
    }

    // step 10
    let next = adversary.choose(g, delta, n, oracle, state.tol)?;
    if !(gamma1_distance(&next, g)?.upper < delta) {
        return Err(invariant("step 10", "f_{n+1} lies outside B(g_n, δ_n)"));
    }

    let g_measure = preimage_measure(g, oracle, state.tol)?.measure;
    let next_measure = preimage_measure(&next, oracle, state.tol)?.measure;
    let covered_len: f64 = phi.tents().iter().map(|t| t.interval.len()).fold(0.0, |a, b| a + b);
    let hole_len: f64 = holes.iter().map(|h| h.r_interval.len()).fold(0.0, |a, b| a + b);
    let on_tents = preimage_measure_on(g, oracle, &i_set, state.tol)?.measure;
    let reduction_rhs = params.round_factor() * covered_len + smoothing.t_set.total_length();

    let record = RoundRecord {
        n,
        theta,
        delta,
        cover,
        k,
        stopping,
        phi,
        holes,
        s_set,
        a_set,
        f_set,
        g_measure,
        next_measure,
        reduction: (on_tents, reduction_rhs),
        sup_to_f1,
        gamma1_to_f1,
        smoothing,
    };
    state.f = next;
    state.delta = delta;
    let t_len = record.t_set().total_length();
    let c_len = record.stopping.c_set.total_length();
    state.rounds.push(record);
    let bound_rhs = state.aggregate_bound(params);
    state.audit.push(AuditRow {
        round: n,
        measure: next_measure.value,
        measure_error: next_measure.error_bound,
        covered_len,
        hole_len,
        c_len,
        t_len,
        delta,
        theta,
        bound_rhs,
    });
    log::info!(
        "round {n}: measure {:.6} ± {:.1e}, {} tents, |C| = {c_len:.3e}",
        next_measure.value,
        next_measure.error_bound,
        state.rounds.last().map_or(0, |r| r.phi.len())
    );
    Ok(state)
}
