use proptest::prelude::*;

use gamma_null::geometry::{Curve, Interval, IntervalSet, Point};
use gamma_null::porous::{CantorConstruction, CantorSpec, PorousSetOracle};
use gamma_null::preimage::preimage_measure;

fn interval_set(raw: Vec<(f64, f64)>) -> IntervalSet {
    IntervalSet::from_intervals(
        raw.into_iter()
            .map(|(a, w)| Interval::new(a, (a + w).min(1.0)).unwrap())
            .collect(),
    )
}

fn arb_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((0.0..0.95f64, 0.0..0.2f64), 0..8).prop_map(interval_set)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inclusion_exclusion(a in arb_set(), b in arb_set()) {
        let lhs = a.union(&b).total_length() + a.intersection(&b).total_length();
        let rhs = a.total_length() + b.total_length();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn complement_partitions_unit(a in arb_set()) {
        let c = a.complement();
        prop_assert!(c.intersection(&a).total_length() < 1e-15);
        prop_assert!((c.total_length() + a.total_length() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_length_matches_partial_sum(mu in 0.02..0.32f64, depth in 1usize..12) {
        let c = CantorConstruction::fat(CantorSpec::new(mu, depth).unwrap()).unwrap();
        let partial = 1.0 - (1..=depth as i32).map(|k| 2f64.powi(k - 1) * mu.powi(k)).sum::<f64>();
        prop_assert!((c.truncated_set().total_length() - partial).abs() < 1e-12);
        prop_assert!((partial - c.limit_measure()).abs() <= c.tail_bound() + 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn affine_preimage_is_scaled_intersection(a in -0.3..0.8f64, b in 0.1..1.5f64, depth in 2usize..7) {
        let construction = CantorConstruction::fat(CantorSpec::new(0.3, depth).unwrap()).unwrap();
        let set = construction.truncated_set();
        let oracle = PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, depth).unwrap(), 0.5).unwrap();
        let curve = Curve::affine(Point::xy(a, 0.0), Point::xy(b, 0.3));
        let m = preimage_measure(&curve, &oracle, 1e-8).unwrap().measure;
        let exact = set.intersection(&IntervalSet::single(Interval::new(a, a + b).unwrap())).total_length() / b;
        prop_assert!((m.value - exact).abs() <= m.error_bound + 1e-12);
    }
}
