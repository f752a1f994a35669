use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{
    audit_measure_bounds, halving_run, martingale_diagnostics, run_pass, sigma_porous_schedule, AuditReport,
    EngineParams, PassState, RunOptions, NULL_SLACK,
};
use crate::error::{Error, Result};
use crate::geometry::Curve;
use crate::porous::{PorosityMode, PorousSetOracle};
use crate::power_lab::counterexample_experiment;

use super::config::{EngineSpec, ExperimentConfig, ExperimentKind, OracleSpec, OutputFormat};

/// Pairwise increment integrals at or below this count as zero.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    /// Name of the inequality or identity checked.
    pub invariant: String,
    pub holds: bool,
    pub detail: String,
}

impl Verdict {
    fn new(invariant: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Verdict {
            invariant: invariant.into(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub sigma: f64,
    pub m: f64,
    pub lambda: f64,
    pub rounds: u64,
    pub q: f64,
    pub eps: f64,
    pub c: f64,
    pub strict: bool,
    pub desk_feasible: bool,
    pub gate_lhs: f64,
    pub gate_holds: bool,
}

impl From<&EngineParams> for ResolvedParams {
    fn from(p: &EngineParams) -> Self {
        ResolvedParams {
            sigma: p.sigma,
            m: p.m,
            lambda: p.lambda,
            rounds: p.rounds,
            q: p.q,
            eps: p.eps,
            c: p.c,
            strict: p.strict,
            desk_feasible: p.desk_feasible,
            gate_lhs: p.gate_lhs(),
            gate_holds: p.gate_holds(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub kind: ExperimentKind,
    pub seed: u64,
    /// The config with defaults filled in.
    pub config: String,
    pub params: Option<ResolvedParams>,
    /// Table id to CSV text.
    pub tables: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
    /// Scalar results as `(name, value)`.
    pub values: Vec<(String, String)>,
    /// Kept out of written files so they stay byte-identical across runs.
    pub wall_clock: Duration,
}

impl RunReport {
    fn new(kind: ExperimentKind, config: &ExperimentConfig) -> Self {
        RunReport {
            kind,
            seed: config.seed,
            config: config.resolved(),
            params: None,
            tables: BTreeMap::new(),
            verdicts: Vec::new(),
            values: Vec::new(),
            wall_clock: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.holds)
    }

    pub fn table_ids(&self) -> Vec<&str> {
        self.tables.keys().map(String::as_str).collect()
    }

    fn table(&mut self, id: &str, csv: String) {
        self.tables.insert(id.to_string(), csv);
    }

    fn value(&mut self, name: &str, v: impl std::fmt::Display) {
        self.values.push((name.to_string(), v.to_string()));
    }

    fn verdict(&mut self, invariant: impl Into<String>, holds: bool, detail: impl Into<String>) {
        self.verdicts.push(Verdict::new(invariant, holds, detail));
    }

    /// Deterministic text summary; excludes the wall clock.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "[run]\nkind = \"{}\"\nseed = {}", self.kind.name(), self.seed);
        let _ = writeln!(out, "status = \"{}\"", if self.passed() { "pass" } else { "fail" });
        if let Some(p) = &self.params {
            let _ = writeln!(
                out,
                "\n[params]\nsigma = {:e}\nM = {:e}\nlambda = {:e}\nN = {}\nQ = {:e}\neps = {:e}\nc = {:e}\nstrict = {}\ndesk_feasible = {}\ngate_lhs = {:e}\ngate_holds = {}",
                p.sigma, p.m, p.lambda, p.rounds, p.q, p.eps, p.c, p.strict, p.desk_feasible, p.gate_lhs, p.gate_holds
            );
        }
        if !self.values.is_empty() {
            out.push_str("\n[values]\n");
            for (k, v) in &self.values {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out.push_str("\n[verdicts]\n");
        for v in &self.verdicts {
            let _ = writeln!(out, "{} {}: {}", if v.holds { "PASS" } else { "FAIL" }, v.invariant, v.detail);
        }
        let _ = writeln!(out, "\n[tables]\nids = {:?}", self.table_ids());
        let _ = write!(out, "\n[config]\n{}", self.config);
        out
    }

    /// Writes `summary.txt`, plus `<id>.csv` per table in CSV format.
    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join("summary.txt");
        std::fs::write(&path, self.summary())?;
        written.push(path);
        if format == OutputFormat::Csv {
            for id in self.tables.keys() {
                written.push(emit_plot_data(self, id, dir)?);
            }
        }
        Ok(written)
    }
}

/// Writes table `which` to `<dir>/<which>.csv`.
pub fn emit_plot_data(report: &RunReport, which: &str, dir: &Path) -> Result<PathBuf> {
    let csv = report.tables.get(which).ok_or_else(|| {
        Error::Parameter(format!(
            "unknown table `{which}`; available: {}",
            report.table_ids().join(", ")
        ))
    })?;
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{which}.csv"));
    std::fs::write(&path, csv)?;
    Ok(path)
}

/// Validates `config` for `kind` and runs it.
pub fn run_experiment(kind: ExperimentKind, config: &ExperimentConfig) -> Result<RunReport> {
    config.validate(kind)?;
    let start = Instant::now();
    let mut report = RunReport::new(kind, config);
    match kind {
        ExperimentKind::Avoid => run_avoid(config, &mut report)?,
        ExperimentKind::Halving => run_halving(config, &mut report)?,
        ExperimentKind::Martingale => run_martingale(config, &mut report)?,
        ExperimentKind::SigmaSchedule => run_schedule(config, &mut report)?,
        ExperimentKind::Counterexample => run_counterexample(config, &mut report)?,
        ExperimentKind::PorosityCheck => run_porosity(config, &mut report)?,
    }
    report.wall_clock = start.elapsed();
    Ok(report)
}

struct Setup {
    oracle: PorousSetOracle,
    f1: Curve,
    params: EngineParams,
    engine: EngineSpec,
}

fn setup(config: &ExperimentConfig, report: &mut RunReport) -> Result<Setup> {
    let spec = config.oracle.as_ref().expect("validated");
    let engine = config.engine.clone().expect("validated");
    let oracle = spec.build()?;
    let f1 = config.curve.build()?;
    let params = engine.params(&f1, &oracle, spec.c(), config.tol)?;
    report.params = Some((&params).into());
    if let Some(base) = oracle.base_set() {
        report.table("strip", base.to_csv());
    }
    Ok(Setup {
        oracle,
        f1,
        params,
        engine,
    })
}

/// Strict parameters beyond desk scale are only checked symbolically.
fn symbolic_only(s: &Setup, report: &mut RunReport) -> bool {
    if s.params.desk_feasible {
        return false;
    }
    report.verdict(
        "lambda_gate",
        s.params.gate_holds(),
        format!("(eps*lambda^2*kappa^2 - 1)*log(1 - Q/lambda) = {:e} < -log 4", s.params.gate_lhs()),
    );
    report.value("runnable", false);
    true
}

fn audit_verdicts(report: &mut RunReport, a: &AuditReport) {
    let n = a.round;
    for w in &a.windows {
        report.verdict(
            format!("window_bound[n={n},m={}]", w.m),
            w.holds(),
            format!("|f_n^-1(E) cap F_m| = {:e} <= |C_m| + 7eps/2^m = {:e}", w.measured.lower(), w.bound),
        );
    }
    report.verdict(
        format!("aggregate_bound[n={n}]"),
        a.aggregate_holds(),
        format!("|f_n^-1(E)| = {:e} <= {:e}", a.measure.lower(), a.aggregate_bound),
    );
    report.verdict(
        format!("stopping_total[n={n}]"),
        a.stopping_holds(),
        format!("sum |C_i| = {:e} < 2eps = {:e}", a.c_total, a.c_bound),
    );
    report.verdict(
        format!("partition[n={n}]"),
        a.partition_holds(),
        format!("|F_i union (I_k minus R_k)| = {:.15}", a.partition_length),
    );
}

fn reduction_verdicts(report: &mut RunReport, state: &PassState) {
    for r in &state.rounds {
        report.verdict(
            format!("round_reduction[n={}]", r.n),
            r.reduction_holds(),
            format!(
                "|g_n^-1(E) cap I| = {:e} <= (1 - Q/lambda) sum |I_k| + |T_n| = {:e}",
                r.reduction.0.lower(),
                r.reduction.1
            ),
        );
    }
}

fn measure_table(state: &PassState) -> String {
    let mut out = String::from("round,measure,measure_error\n");
    let _ = writeln!(out, "0,{:e},{:e}", state.initial.value, state.initial.error_bound);
    for r in &state.rounds {
        let _ = writeln!(out, "{},{:e},{:e}", r.n, r.next_measure.value, r.next_measure.error_bound);
    }
    out
}

fn audit_table(audits: &[AuditReport]) -> String {
    let mut out = String::from("round,check,measured,bound,holds\n");
    for a in audits {
        for line in a.to_csv().lines().skip(1) {
            let _ = writeln!(out, "{},{line}", a.round);
        }
    }
    out
}

fn run_avoid(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    if symbolic_only(&s, report) {
        return Ok(());
    }
    let adversary = s.engine.adversary(config.seed);
    let state = PassState::new(s.f1.clone(), &s.oracle, config.seed, config.tol)?;
    let state = run_pass(state, &s.params, &s.oracle, &adversary)?;
    let audit = audit_measure_bounds(&state, &s.params, &s.oracle)?;
    let round = state.rounds.last().expect("one round");
    report.value("initial_measure", format!("{:e}", state.initial.value));
    report.value("final_measure", format!("{:e}", round.next_measure.value));
    report.value("tents", round.k);
    report.value("delta", format!("{:e}", round.delta));
    report.table("cover", round.cover.to_csv());
    report.table("holes", round.s_set.to_csv());
    report.table("measure", measure_table(&state));
    report.table("rounds", state.audit_csv());
    report.table("audit", audit_table(std::slice::from_ref(&audit)));
    reduction_verdicts(report, &state);
    audit_verdicts(report, &audit);
    Ok(())
}

fn run_halving(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    if symbolic_only(&s, report) {
        return Ok(());
    }
    let adversary = s.engine.adversary(config.seed);
    let opts = RunOptions {
        seed: config.seed,
        tol: config.tol,
        audit: s.engine.audit,
    };
    let h = halving_run(&s.f1, &s.oracle, &s.params, &adversary, opts)?;
    report.value("rounds", h.rounds);
    report.value("initial_measure", format!("{:e}", h.initial.value));
    report.value("final_measure", format!("{:e}", h.final_measure.value));
    report.value("degenerate", h.degenerate);
    report.value("exhausted", h.exhausted);
    report.value("worst_case_bound", format!("{:e}", h.worst_case_bound));
    report.table("measure", h.trajectory_csv());
    report.table("rounds", h.state.audit_csv());
    if !h.audits.is_empty() {
        report.table("audit", audit_table(&h.audits));
    }
    let m = martingale_diagnostics(&h.state, s.params.lambda, s.params.sigma);
    report.table("martingale", m.to_csv());
    reduction_verdicts(report, &h.state);
    for a in &h.audits {
        audit_verdicts(report, a);
    }
    report.verdict(
        "halving",
        h.halved,
        format!(
            "|f_n^-1(E)| = {:e} < |f_1^-1(E)|/2 = {:e} after {} rounds",
            h.final_measure.upper(),
            0.5 * h.initial.lower(),
            h.rounds
        ),
    );
    Ok(())
}

fn run_martingale(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let s = setup(config, report)?;
    if symbolic_only(&s, report) {
        return Ok(());
    }
    let adversary = s.engine.adversary(config.seed);
    let mut state = PassState::new(s.f1.clone(), &s.oracle, config.seed, config.tol)?;
    while (state.rounds.len() as u64) < s.params.rounds {
        state = run_pass(state, &s.params, &s.oracle, &adversary)?;
        if state.f_union().total_length() >= 1.0 - NULL_SLACK {
            break;
        }
    }
    let m = martingale_diagnostics(&state, s.params.lambda, s.params.sigma);
    report.value("rounds", m.rounds);
    report.value("second_moment", format!("{:e}", m.second_moment));
    report.value("kappa", format!("{:e}", m.kappa));
    report.value("exceedance", format!("{:e}", m.exceedance));
    report.table("measure", measure_table(&state));
    report.table("martingale", m.to_csv());
    let mut pairs = String::from("n,p,inner\n");
    for (n, p, v) in &m.pairwise {
        let _ = writeln!(pairs, "{n},{p},{v:e}");
    }
    report.table("pairwise", pairs);
    report.verdict(
        "increment_orthogonality",
        m.orthogonal(ORTHOGONALITY_TOL),
        format!("max |E<phi_n', phi_p'>| = {:e} <= {ORTHOGONALITY_TOL:e}", m.max_pairwise()),
    );
    report.verdict(
        "second_moment_bound",
        m.moment_within_bound(),
        format!("E|X_N|^2 = {:e} <= N/lambda^2 = {:e}", m.second_moment, m.bound),
    );
    report.verdict(
        "kolmogorov_maximal",
        m.kolmogorov_holds(),
        format!("|max |X_n| >= kappa| = {:e} <= E|X_N|^2/kappa^2", m.exceedance),
    );
    report.verdict("pointwise_increment_bound", m.pointwise_ok, "|X_n| <= (n - 1)/lambda");
    report.verdict("increment_constancy", m.constancy_ok, "X_n constant on each interval of round n");
    Ok(())
}

fn run_schedule(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let Some(OracleSpec::Union { pieces, .. }) = &config.oracle else {
        unreachable!("validated")
    };
    let s = setup(config, report)?;
    if symbolic_only(&s, report) {
        return Ok(());
    }
    let members = pieces.iter().map(OracleSpec::build).collect::<Result<Vec<_>>>()?;
    let target = s.engine.target.expect("validated");
    let adversary = s.engine.adversary(config.seed);
    let opts = RunOptions {
        seed: config.seed,
        tol: config.tol,
        audit: false,
    };
    let r = sigma_porous_schedule(&members, target, &s.f1, &s.params, &adversary, opts)?;
    report.table("schedule", r.to_csv());
    let mut ms = String::from("milestone,piece,halved,rounds\n");
    for (i, (p, h, n)) in r.milestones.iter().enumerate() {
        let _ = writeln!(ms, "{},{p},{h},{n}", i + 1);
    }
    report.table("milestones", ms);
    report.value("milestones", r.milestones.len());
    report.value("flagged", format!("{:?}", r.flagged));
    for (p, traj) in r.trajectories.iter().enumerate() {
        let last = traj.last().expect("nonempty");
        report.verdict(
            format!("below_target[piece={p}]"),
            last.upper() < target,
            format!("|f^-1(E_{p})| = {:e} < {target:e}", last.upper()),
        );
        report.verdict(format!("monotone[piece={p}]"), r.monotone(p), "nonincreasing across milestones");
    }
    Ok(())
}

fn run_counterexample(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let c = config.counterexample.as_ref().expect("validated");
    let r = counterexample_experiment(c.mu, c.p, c.depth, c.eps, c.delta, config.seed)?;
    report.table("tubes", r.tubes.to_csv());
    let mut kv = String::from("quantity,value,error_bound\n");
    for (name, v, e) in [
        ("area_T", r.area_t, 0.0),
        ("cantor_measure", r.cantor_measure, 0.0),
        ("limit_measure", r.limit_measure, r.tail_bound),
        ("preimage_B", r.preimage_b.value, r.preimage_b.error_bound),
        ("preimage_A", r.preimage_a.value, r.preimage_a.error_bound),
        ("perturbed_B", r.perturbed_b.value, r.perturbed_b.error_bound),
        ("perturbed_A", r.perturbed_a.value, r.perturbed_a.error_bound),
    ] {
        let _ = writeln!(kv, "{name},{v:e},{e:e}");
    }
    report.table("counterexample", kv);
    report.value("preimage_A", format!("{:.12}", r.preimage_a.value));
    report.value("area_T", format!("{:e}", r.area_t));
    report.verdict(
        "tube_area",
        r.area_t < c.eps,
        format!("area(A) <= area(T) <= {:e} < eps = {:e}", r.area_t, c.eps),
    );
    report.verdict(
        "preimage_identity",
        r.identity_holds(),
        "|gamma^-1(A)| = |gamma^-1(B)| by bisection and monotone inversion, both curves",
    );
    let gap = (r.preimage_b.value - r.limit_measure).abs();
    report.verdict(
        "cantor_limit",
        gap <= r.tail_bound + r.preimage_b.error_bound,
        format!("|gamma^-1(B)| - limit = {gap:e} within tail {:e}", r.tail_bound),
    );
    report.verdict(
        "power_p_witnesses",
        r.witness_failures == 0,
        format!("{} of {} witnesses failed re-verification", r.witness_failures, r.witnesses_checked),
    );
    Ok(())
}

fn run_porosity(config: &ExperimentConfig, report: &mut RunReport) -> Result<()> {
    let spec = config.oracle.as_ref().expect("validated");
    let oracle = spec.build()?;
    let scales = &config.porosity.scales;
    if let Some(base) = oracle.base_set() {
        report.table("strip", base.to_csv());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = String::from("point,x,y,eps,h_x,h_y,r,d,status\n");
    let (mut verified, mut rejected, mut absent) = (0usize, 0usize, 0usize);
    for i in 0..config.porosity.points {
        let Some(x) = oracle.sample_point(&mut rng, 2) else { break };
        for &eps in scales {
            let found = match oracle.mode() {
                PorosityMode::PowerP { p } => oracle.find_hole_power_p(&x, eps, p),
                PorosityMode::CPorous { .. } => oracle.find_hole(&x, eps),
            };
            let (x0, y0) = (x.coords()[0], x.coords()[1]);
            match found {
                Ok(w) => {
                    let status = match oracle.verify_witness(&x, eps, &w) {
                        Ok(()) => {
                            verified += 1;
                            "verified"
                        }
                        Err(_) => {
                            rejected += 1;
                            "rejected"
                        }
                    };
                    let _ = writeln!(
                        table,
                        "{i},{x0:e},{y0:e},{eps:e},{:e},{:e},{:e},{:e},{status}",
                        w.h.coords()[0],
                        w.h.coords()[1],
                        w.r,
                        w.d
                    );
                }
                Err(Error::Resolution(_)) | Err(Error::Depth { .. }) => {
                    absent += 1;
                    let _ = writeln!(table, "{i},{x0:e},{y0:e},{eps:e},,,,,below-resolution");
                }
                Err(Error::Invariant { .. }) => {
                    rejected += 1;
                    let _ = writeln!(table, "{i},{x0:e},{y0:e},{eps:e},,,,,rejected");
                }
                Err(e) => return Err(e),
            }
        }
    }
    report.table("witnesses", table);
    let estimate = oracle.estimate_porosity_constant(config.porosity.points, scales, config.seed);
    report.value("verified", verified);
    report.value("below_resolution", absent);
    report.value("estimated_constant", format!("{estimate:e}"));
    report.verdict(
        "witness_inequality",
        rejected == 0,
        format!("{rejected} of {} witnesses failed re-verification", verified + rejected),
    );
    Ok(())
}
