use crate::error::{Error, Result};
use crate::geometry::{sup_derivative_norm, Curve};
use crate::porous::PorousSetOracle;
use crate::preimage::{preimage_measure, MeasureEstimate};

use super::adversary::Adversary;
use super::audit::{audit_measure_bounds, AuditReport};
use super::params::{derive_with_m, EngineParams, ParamMode};
use super::pass::{run_pass, PassState, NULL_SLACK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Tolerance of every preimage estimate.
    pub tol: f64,
    /// Run the full measure audit after every round.
    pub audit: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            seed: 1,
            tol: 1e-7,
            audit: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HalvingReport {
    pub halved: bool,
    /// The initial measure was already zero.
    pub degenerate: bool,
    /// Every parameter was absorbed into `⋃F_i` before halving.
    pub exhausted: bool,
    pub rounds: usize,
    pub initial: MeasureEstimate,
    pub final_measure: MeasureEstimate,
    /// `|f_n⁻¹(E)|` for `n = 1, 2, …`.
    pub trajectory: Vec<MeasureEstimate>,
    /// Centre and radius of the last ball `B(g_N, δ_N)`.
    pub final_centre: Curve,
    pub final_delta: f64,
    /// `(1 − Q/λ)^N |f₁⁻¹(E)| + 18ε` at the rounds run.
    pub worst_case_bound: f64,
    pub audits: Vec<AuditReport>,
    pub state: PassState,
}

impl HalvingReport {
    pub fn trajectory_csv(&self) -> String {
        let mut out = String::from("round,measure,measure_error\n");
        for (i, m) in self.trajectory.iter().enumerate() {
            out.push_str(&format!("{},{:e},{:e}\n", i, m.value, m.error_bound));
        }
        out
    }
}

fn halved(m: &MeasureEstimate, initial: &MeasureEstimate) -> bool {
    m.upper() < 0.5 * initial.lower()
}

/// Runs passes until `|f_n⁻¹(E)| < ½|f₁⁻¹(E)|` or the round cap.
pub fn halving_run(
    f1: &Curve,
    oracle: &PorousSetOracle,
    params: &EngineParams,
    adversary: &Adversary,
    opts: RunOptions,
) -> Result<HalvingReport> {
    let mut state = PassState::new(f1.clone(), oracle, opts.seed, opts.tol)?;
    let initial = state.initial;
    let mut trajectory = vec![initial];
    let mut audits = Vec::new();
    let degenerate = initial.upper() == 0.0;
    let mut done = degenerate;
    let mut exhausted = false;
    while !done && (state.rounds.len() as u64) < params.rounds {
        state = run_pass(state, params, oracle, adversary)?;
        let m = state.current_measure();
        trajectory.push(m);
        if opts.audit {
            audits.push(audit_measure_bounds(&state, params, oracle)?);
        }
        done = halved(&m, &initial);
        if !done && state.f_union().total_length() >= 1.0 - NULL_SLACK {
            exhausted = true;
            break;
        }
    }
    let final_measure = *trajectory.last().expect("nonempty");
    let rounds = state.rounds.len();
    let (final_centre, final_delta) = match state.rounds.last() {
        Some(r) => (r.g().clone(), r.delta),
        None => (f1.clone(), params.sigma),
    };
    if !degenerate && !done {
        log::warn!(
            "no halving after {rounds} rounds: {:.6} of {:.6}",
            final_measure.value,
            initial.value
        );
    }
    Ok(HalvingReport {
        halved: degenerate || done,
        degenerate,
        exhausted,
        rounds,
        initial,
        final_measure,
        trajectory,
        final_centre,
        final_delta,
        worst_case_bound: params.round_factor().powi(rounds as i32) * initial.upper() + 18.0 * params.eps,
        audits,
        state,
    })
}

#[derive(Debug, Clone)]
pub struct ScheduleReport {
    pub success: bool,
    pub vacuous: bool,
    pub final_curve: Curve,
    /// Per piece, the measure after each milestone (index 0 is the start).
    pub trajectories: Vec<Vec<MeasureEstimate>>,
    /// `(piece, halved, rounds)` per halving run.
    pub milestones: Vec<(usize, bool, usize)>,
    /// Pieces whose halving run hit its cap.
    pub flagged: Vec<usize>,
}

impl ScheduleReport {
    pub fn monotone(&self, piece: usize) -> bool {
        self.trajectories[piece].windows(2).all(|w| w[1].value <= w[0].value)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("milestone,piece,measure,measure_error\n");
        for (p, traj) in self.trajectories.iter().enumerate() {
            for (i, m) in traj.iter().enumerate() {
                out.push_str(&format!("{i},{p},{:e},{:e}\n", m.value, m.error_bound));
            }
        }
        out
    }
}

/// Halves the worst piece repeatedly until every piece is below `target`,
/// restarting each run at the previous output with the same `σ`, `λ`, `ε`.
pub fn sigma_porous_schedule(
    pieces: &[PorousSetOracle],
    target: f64,
    f1: &Curve,
    params: &EngineParams,
    adversary: &Adversary,
    opts: RunOptions,
) -> Result<ScheduleReport> {
    if !(target > 0.0) {
        return Err(Error::Parameter(format!("target {target} must be positive")));
    }
    let measure_all = |f: &Curve| -> Result<Vec<MeasureEstimate>> {
        pieces.iter().map(|o| Ok(preimage_measure(f, o, opts.tol)?.measure)).collect()
    };
    let mut f = f1.clone();
    let start = measure_all(&f)?;
    let mut trajectories: Vec<Vec<MeasureEstimate>> = start.iter().map(|m| vec![*m]).collect();
    let worst = start.iter().map(|m| m.upper()).fold(0.0, f64::max);
    let per_piece = if worst > target {
        (worst / target).log2().ceil() as usize + 1
    } else {
        0
    };
    let max_milestones = pieces.len() * per_piece;
    let mut milestones = Vec::new();
    let mut flagged = Vec::new();
    let mut current = start;
    for step in 0..max_milestones {
        let Some(piece) = (0..pieces.len())
            .filter(|&p| current[p].upper() >= target)
            .max_by(|&a, &b| current[a].value.total_cmp(&current[b].value))
        else {
            break;
        };
        let m = sup_derivative_norm(&f).upper + params.sigma;
        let local = derive_with_m(
            m,
            params.sigma,
            params.eps,
            params.c,
            ParamMode::DeskRelaxed {
                lambda: params.lambda,
                round_cap: params.rounds,
            },
        )?;
        let run_opts = RunOptions {
            seed: opts.seed ^ (step as u64 + 1).wrapping_mul(0xD6E8_FEB8_6659_FD93),
            ..opts
        };
        let report = halving_run(&f, &pieces[piece], &local, adversary, run_opts)?;
        milestones.push((piece, report.halved, report.rounds));
        f = report.state.f.clone();
        current = measure_all(&f)?;
        for (traj, m) in trajectories.iter_mut().zip(&current) {
            traj.push(*m);
        }
        if !report.halved {
            flagged.push(piece);
            break;
        }
    }
    let success = current.iter().all(|m| m.upper() < target);
    Ok(ScheduleReport {
        success,
        vacuous: pieces.is_empty(),
        final_curve: f,
        trajectories,
        milestones,
        flagged,
    })
}
