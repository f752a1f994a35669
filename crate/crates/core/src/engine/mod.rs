//! The iterated measure-reduction algorithm with its bookkeeping and diagnostics.

mod adversary;
mod audit;
mod martingale;
mod params;
mod pass;
mod run;

pub use adversary::{Adversary, CustomAdversary};
pub(crate) use adversary::random_bump;
pub(crate) use pass::NULL_SLACK;
pub use audit::{audit_measure_bounds, AuditReport, WindowCheck};
pub use martingale::{martingale_diagnostics, LevelStats, MartingaleReport};
pub use params::{derive_params, derive_with_m, round_count, EngineParams, ParamMode, DESK_ROUND_LIMIT};
pub use pass::{run_pass, stopping_set, AuditRow, PassState, RoundRecord, StoppingSet};
pub use run::{halving_run, sigma_porous_schedule, HalvingReport, RunOptions, ScheduleReport};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::{gamma1_distance, Curve, Point};
    use crate::porous::{CantorSpec, PorousSetOracle};
    use crate::perturbation::{Tent, TentPerturbation};
    use crate::geometry::Interval;

    fn line() -> Curve {
        Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
    }

    fn fat(depth: usize) -> PorousSetOracle {
        PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, depth).unwrap(), 0.5).unwrap()
    }

    fn empty() -> PorousSetOracle {
        PorousSetOracle::union(vec![], 0.5).unwrap()
    }

    fn desk() -> EngineParams {
        derive_params(&line(), 0.8, 0.003, 0.5, ParamMode::DeskRelaxed { lambda: 16.0, round_cap: 50 }).unwrap()
    }

    #[test]
    fn strict_parameters_are_huge() {
        let p = derive_with_m(2.0, 0.8, 1.0 / 72.0, 0.5, ParamMode::Strict { sup_measure: None }).unwrap();
        assert_eq!(p.q, 1.0 / 16.0);
        println!("strict λ = {}, N = {}", p.lambda, p.rounds);
        assert!(p.lambda > 1e5 && p.lambda < 1e6, "λ = {}", p.lambda);
        assert!(p.rounds > 1_000_000 && p.rounds < 10_000_000, "N = {}", p.rounds);
        assert!(!p.desk_feasible);
        assert!(p.gate_holds());
        // direct evaluation on both sides of the returned λ
        let lhs = |l: f64| {
            let a = l * l * (0.8 / 8.0 - 1.0 / l).powi(2);
            (a / 72.0 - 1.0) * (1.0 - (1.0 / 16.0) / l).ln()
        };
        assert!(lhs(p.lambda * (1.0 + 1e-9)) < -(4f64.ln()));
        assert!(lhs(p.lambda * (1.0 - 1e-6)) >= -(4f64.ln()));
        assert_eq!(p.rounds, round_count(p.lambda, 0.8, 1.0 / 72.0));
        // leading-order closed form 64 log 4 / (ε σ² Q)
        let approx = 64.0 * 4f64.ln() / ((1.0 / 72.0) * 0.64 / 16.0);
        assert!((p.lambda / approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn strict_eps_gate() {
        let r = derive_with_m(2.0, 0.8, 0.01, 0.5, ParamMode::Strict { sup_measure: Some(0.25) });
        assert!(matches!(r, Err(Error::Parameter(_))));
    }

    #[test]
    fn desk_parameters() {
        let p = desk();
        assert!(!p.strict && p.desk_feasible);
        assert_eq!(p.rounds, 50);
        let r = derive_params(&line(), 0.8, 0.003, 0.5, ParamMode::DeskRelaxed { lambda: 10.0, round_cap: 50 });
        assert!(matches!(r, Err(Error::Parameter(_))));
        assert!((p.m - 1.8).abs() < 1e-9);
        assert!((p.kappa() - 0.0375).abs() < 1e-15);
    }

    #[test]
    fn empty_set_pass_is_identity() {
        let o = empty();
        let s = PassState::new(line(), &o, 1, 1e-6).unwrap();
        let s = run_pass(s, &desk(), &o, &Adversary::Stay).unwrap();
        let r = &s.rounds[0];
        assert!(r.stopping.c_set.is_empty());
        assert_eq!(r.g(), &line());
        assert_eq!(r.g_measure.value, 0.0);
        assert_eq!(s.audit[0].measure, 0.0);
        let a = audit_measure_bounds(&s, &desk(), &o).unwrap();
        assert!(a.all_hold());
        assert_eq!(a.measure.value, 0.0);
        assert_eq!(a.c_total, 0.0);
    }

    #[test]
    fn round_zero_audit() {
        let o = fat(4);
        let p = desk();
        let s = PassState::new(line(), &o, 1, 1e-6).unwrap();
        let a = audit_measure_bounds(&s, &p, &o).unwrap();
        assert!(a.windows.is_empty());
        assert!((a.aggregate_bound - (s.initial.upper() + 8.0 * p.eps)).abs() < 1e-15);
        assert!(a.all_hold());
    }

    #[test]
    fn one_reference_pass() {
        let o = fat(6);
        let p = desk();
        let s = PassState::new(line(), &o, 3, 1e-7).unwrap();
        let s = run_pass(s, &p, &o, &Adversary::Stay).unwrap();
        let r = &s.rounds[0];
        assert!(r.stopping.c_set.is_empty());
        let stay = gamma1_distance(&s.f, r.g()).unwrap();
        assert_eq!(stay.lower, 0.0);
        assert!(stay.upper < r.delta);
        assert!(r.delta < 0.5 && r.delta < 0.8 / 16.0);
        assert!(r.reduction_holds());
        let independent = crate::preimage::preimage_measure(r.g(), &o, 1e-8).unwrap().measure;
        let bound = p.round_factor() * r.cover.total_length + p.eps / 2.0 + r.cover.uncovered_bound;
        assert!(independent.lower() <= bound, "{independent:?} vs {bound}");
        assert!(r.sup_to_f1.upper < 0.2);
        let m = martingale_diagnostics(&s, p.lambda, p.sigma);
        assert!(m.second_moment <= 1.0 / (p.lambda * p.lambda));
        assert!(m.pairwise.is_empty());
        assert!(m.kolmogorov_holds());
    }

    #[test]
    fn stopping_set_cases() {
        let f = line();
        let tents: Vec<Tent> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&x| Tent {
                interval: Interval::of(x - 0.04, x + 0.04),
                x,
                half: 0.04,
                peak: Point::xy(0.0025, 0.0),
                alpha: 0.0625,
                centre: Point::xy(x + 0.0025, 0.0),
                radius: 0.001,
                d: 0.0025,
            })
            .collect();
        let psi = TentPerturbation::new(tents, 16.0, 2).unwrap();
        let s = stopping_set(&f, &psi, &f, 0.8).unwrap();
        assert!(s.c_set.is_empty());
        assert_eq!(s.l(), 3);
        let s = stopping_set(&f, &psi, &f, 0.01).unwrap();
        assert_eq!(s.l(), 0);
        assert_eq!(s.flagged, vec![0, 1, 2]);
        // a steep vertical drift on [0.45, 0.55]
        let ts = [0.0, 0.45, 0.55, 1.0];
        let pos = [Point::xy(0.0, 0.0), Point::xy(0.45, 0.0), Point::xy(0.55, 0.03), Point::xy(1.0, 0.03)];
        let steep = Curve::piecewise_linear(&ts, &pos).unwrap();
        let s = stopping_set(&steep, &psi, &f, 0.8).unwrap();
        assert_eq!(s.flagged, vec![1]);
        assert_eq!(s.survivors, vec![0, 2]);
        let drift = steep.sub(&f).unwrap().add(&psi.as_curve()).unwrap();
        for (k, t) in psi.tents().iter().enumerate() {
            let sampled = (1..400)
                .map(|i| t.interval.lo + t.interval.len() * i as f64 / 400.0)
                .map(|u| drift.derivative_sides(u).1.norm())
                .fold(0.0, f64::max);
            assert_eq!(sampled >= 0.2, s.flagged.contains(&k));
        }
    }

    #[test]
    fn worst_sampled_stays_in_ball() {
        let o = fat(4);
        let p = desk();
        let s = PassState::new(line(), &o, 5, 1e-6).unwrap();
        let adv = Adversary::WorstSampled { samples: 3, seed: 9 };
        let s = run_pass(s, &p, &o, &adv).unwrap();
        let r = &s.rounds[0];
        assert!(gamma1_distance(&s.f, r.g()).unwrap().upper < r.delta);
    }

    #[test]
    fn custom_adversary_is_checked() {
        let o = fat(4);
        let p = desk();
        let far: CustomAdversary = std::sync::Arc::new(|g: &Curve, _d: f64, _n: usize| {
            g.add(&Curve::affine(Point::xy(0.1, 0.0), Point::xy(0.0, 0.0))).unwrap()
        });
        let s = PassState::new(line(), &o, 5, 1e-6).unwrap();
        assert!(matches!(run_pass(s, &p, &o, &Adversary::Custom(far)), Err(Error::Precondition(_))));
    }

    #[test]
    fn empty_runs() {
        let o = empty();
        let r = halving_run(&line(), &o, &desk(), &Adversary::Stay, RunOptions::default()).unwrap();
        assert!(r.halved && r.degenerate);
        assert_eq!(r.rounds, 0);
        let s = sigma_porous_schedule(&[], 0.05, &line(), &desk(), &Adversary::Stay, RunOptions::default()).unwrap();
        assert!(s.success && s.vacuous);
    }

    #[test]
    fn delta_schedule_is_strict() {
        let o = fat(4);
        let p = desk();
        let mut s = PassState::new(line(), &o, 2, 1e-6).unwrap();
        let mut prev = 1.0;
        for n in 1..=3 {
            s = run_pass(s, &p, &o, &Adversary::Stay).unwrap();
            let d = s.rounds.last().unwrap().delta;
            assert!(d < prev / 2.0 && d < p.sigma / 2f64.powi(n + 3));
            prev = d;
        }
        let m = martingale_diagnostics(&s, p.lambda, p.sigma);
        assert!(m.orthogonal(1e-12));
        assert!(m.pointwise_ok && m.constancy_ok);
        let sum: f64 = m.increment_moments.iter().sum();
        assert!((sum - m.second_moment).abs() < 1e-12);
    }
}
