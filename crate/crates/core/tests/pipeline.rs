use gamma_null::engine::{
    audit_measure_bounds, derive_params, martingale_diagnostics, run_pass, Adversary, ParamMode, PassState,
};
use gamma_null::geometry::{Curve, Interval, IntervalSet, Point};
use gamma_null::porous::{CantorConstruction, CantorSpec, PorosityMode, PorousSetOracle};
use gamma_null::power_lab::{counterexample_experiment, tube_cover};
use gamma_null::preimage::preimage_measure;
use gamma_null::vitali::select_disjoint_cover;

fn horizontal() -> Curve {
    Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
}

fn cylinder(mu: f64, depth: usize) -> PorousSetOracle {
    PorousSetOracle::fat_cantor_product(CantorSpec::new(mu, depth).unwrap(), 0.5).unwrap()
}

/// `1 − Σ_{k≤D} 2^{k−1} μ^k`.
fn partial_sum(mu: f64, depth: i32) -> f64 {
    1.0 - (1..=depth).map(|k| 2f64.powi(k - 1) * mu.powi(k)).sum::<f64>()
}

#[test]
fn horizontal_preimage_is_cantor_measure() {
    for (mu, depth) in [(0.3, 4), (0.3, 8), (0.2, 6), (0.1, 10)] {
        let m = preimage_measure(&horizontal(), &cylinder(mu, depth), 1e-9).unwrap().measure;
        let exact = partial_sum(mu, depth as i32);
        assert!((m.value - exact).abs() <= m.error_bound + 1e-12, "mu {mu} D {depth}: {m:?} vs {exact}");
    }
}

#[test]
fn affine_preimage_matches_direct_intersection() {
    let set = CantorConstruction::fat(CantorSpec::new(0.3, 6).unwrap()).unwrap().truncated_set();
    for (a, b) in [(0.1, 0.5), (-0.2, 1.5), (0.3, 0.05)] {
        let curve = Curve::affine(Point::xy(a, 0.3), Point::xy(b, -0.7));
        let m = preimage_measure(&curve, &cylinder(0.3, 6), 1e-9).unwrap().measure;
        let window = IntervalSet::single(Interval::new(a, a + b).unwrap());
        let exact = set.intersection(&window).total_length() / b;
        assert!((m.value - exact).abs() <= m.error_bound + 1e-12, "a {a} b {b}");
    }
}

#[test]
fn cover_intervals_are_disjoint_and_verified() {
    let (f, o) = (horizontal(), cylinder(0.3, 5));
    let sel = select_disjoint_cover(&f, &o, 4.0, 0.02, &IntervalSet::empty(), 0.05, 3).unwrap();
    assert!(!sel.chosen.is_empty());
    let mut ivs: Vec<_> = sel.chosen.iter().map(|v| v.interval).collect();
    ivs.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    assert!(ivs.windows(2).all(|w| w[0].hi < w[1].lo));
    for v in &sel.chosen {
        v.verify(&f, &o, 4.0, 0.02).unwrap();
    }
    let sum: f64 = ivs.iter().map(Interval::len).sum();
    assert!((sum - sel.total_length).abs() < 1e-12);
}

#[test]
fn one_pass_does_not_increase_measure_and_audits_hold_in_aggregate() {
    let (f1, o) = (horizontal(), cylinder(0.3, 6));
    let params = derive_params(&f1, 0.8, 0.01, 0.5, ParamMode::DeskRelaxed { lambda: 16.0, round_cap: 3 }).unwrap();
    let mut state = PassState::new(f1, &o, 11, 1e-7).unwrap();
    let start = state.initial;
    for _ in 0..3 {
        state = run_pass(state, &params, &o, &Adversary::Stay).unwrap();
        let a = audit_measure_bounds(&state, &params, &o).unwrap();
        assert!(a.aggregate_holds() && a.stopping_holds() && a.partition_holds());
        assert!(state.rounds.last().unwrap().reduction_holds());
    }
    assert!(state.current_measure().upper() <= start.upper());
    let m = martingale_diagnostics(&state, params.lambda, params.sigma);
    assert!(m.orthogonal(1e-12) && m.moment_within_bound() && m.kolmogorov_holds());
    assert!(m.pointwise_ok && m.constancy_ok);
}

#[test]
fn tube_cover_contains_its_generators() {
    let curves = vec![horizontal(), Curve::affine(Point::xy(0.0, 0.1), Point::xy(1.0, 0.2))];
    let tubes = tube_cover(&curves, 0.01).unwrap();
    assert!(tubes.area_bound() < 0.01);
    for c in &curves {
        assert!((tubes.certified_inside(c).unwrap().total_length() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn counterexample_identity_and_area() {
    let r = counterexample_experiment(0.3, 2.0, 8, 0.01, 0.1, 4).unwrap();
    assert!(r.area_t < 0.01);
    assert!(r.identity_holds());
    assert_eq!(r.witness_failures, 0);
    assert!((r.cantor_measure - partial_sum(0.3, 8)).abs() < 1e-12);
}

#[test]
fn power_p_oracle_rejects_c_porous_witness_search_on_unions() {
    let member = PorousSetOracle::cylinder(
        CantorConstruction::fat(CantorSpec::new(0.3, 6).unwrap()).unwrap(),
        Interval::UNIT,
        PorosityMode::PowerP { p: 2.0 },
    )
    .unwrap();
    let union = PorousSetOracle::union(vec![cylinder(0.3, 4)], 0.5).unwrap();
    let x = Point::xy(0.0, 0.0);
    assert!(member.find_hole_power_p(&x, 0.05, 2.0).is_ok());
    assert!(union.find_hole_power_p(&x, 0.05, 2.0).is_err());
}
