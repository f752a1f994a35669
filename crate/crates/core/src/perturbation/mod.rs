//! Tent perturbations, hole intervals and C¹ smoothing.

mod hole;
mod smooth;
mod tent;

pub use hole::{hole_interval, HoleCase, HoleIntervalResult};
pub use smooth::{smooth, SmoothingResult};
pub use tent::{build_tent, Tent, TentPerturbation};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::geometry::{sup_norm, Curve, IntervalSet, Point};
    use crate::porous::{CantorSpec, PorousSetOracle};
    use crate::vitali::{select_disjoint_cover, CoverSelection};
    use proptest::prelude::*;

    const LAMBDA: f64 = 4.0;
    const THETA: f64 = 0.02;

    fn fat(depth: usize) -> PorousSetOracle {
        PorousSetOracle::fat_cantor_product(CantorSpec::new(0.3, depth).unwrap(), 0.5).unwrap()
    }

    fn line() -> Curve {
        Curve::affine(Point::xy(0.0, 0.0), Point::xy(1.0, 0.0))
    }

    fn cover(seed: u64) -> CoverSelection {
        select_disjoint_cover(&line(), &fat(4), LAMBDA, THETA, &IntervalSet::empty(), 0.05, seed).unwrap()
    }

    #[test]
    fn tent_values() {
        let sel = cover(7);
        assert!(!sel.chosen.is_empty());
        let psi = build_tent(&line(), &sel, sel.chosen.len(), LAMBDA).unwrap();
        for t in psi.tents() {
            assert!(psi.eval(t.x).distance(&t.peak) < 1e-15);
            assert_eq!(psi.eval(t.interval.lo).norm(), 0.0);
            assert_eq!(psi.eval(t.interval.hi).norm(), 0.0);
            let q = 0.5 * (t.interval.lo + t.x);
            assert!(psi.eval(q).distance(&t.peak.scale(0.5)) < 1e-14);
            let slope = psi.derivative(q).unwrap().norm();
            assert!((slope - 1.0 / LAMBDA).abs() < 1e-12, "slope {slope}");
            assert_eq!(t.derivative_integral().norm(), 0.0);
            assert!(psi.derivative(t.x).is_none());
            assert!(psi.knots().contains(&t.x));
        }
        assert!(psi.sup_norm() < THETA);
        let gap = sel.chosen.iter().map(|v| v.interval.hi).fold(0.0, f64::max) + 1e-3;
        if gap < 1.0 {
            assert_eq!(psi.eval(gap).norm(), 0.0);
        }
    }

    #[test]
    fn truncation_restricts() {
        let sel = cover(3);
        let k = sel.chosen.len();
        let psi = build_tent(&line(), &sel, k, LAMBDA).unwrap();
        let l = k / 2;
        let short = psi.truncated(l);
        assert_eq!(short, build_tent(&line(), &sel, l, LAMBDA).unwrap());
        for v in &sel.chosen[..l] {
            assert_eq!(short.eval(v.x), psi.eval(v.x));
        }
        for v in &sel.chosen[l..] {
            assert_eq!(short.eval(v.x).norm(), 0.0);
        }
        assert!(matches!(build_tent(&line(), &sel, k + 1, LAMBDA), Err(Error::Precondition(_))));
    }

    #[test]
    fn as_curve_matches_eval() {
        let sel = cover(11);
        let psi = build_tent(&line(), &sel, sel.chosen.len(), LAMBDA).unwrap();
        let c = psi.as_curve();
        for i in 0..=1000 {
            let t = i as f64 / 1000.0;
            assert!(c.position(t).distance(&psi.eval(t)) < 1e-15);
        }
        assert!((sup_norm(&c).upper - psi.sup_norm()).abs() < 1e-12);
    }

    #[test]
    fn q_arithmetic() {
        let (c, m) = (0.5, 2.0);
        let q = c / (4.0 * m);
        assert_eq!(q, 1.0 / 16.0);
        assert_eq!(q / LAMBDA, 1.0 / 64.0);
    }

    #[test]
    fn hole_interval_ratio() {
        let sel = cover(5);
        let psi = build_tent(&line(), &sel, sel.chosen.len(), LAMBDA).unwrap();
        let o = fat(4);
        for k in 0..psi.len() {
            let hole = hole_interval(&line(), &psi, k, &o, 2.0).unwrap();
            let t = &psi.tents()[k];
            assert!(hole.ratio >= 1.0 / 64.0);
            assert!(hole.r_interval.lo > t.interval.lo && hole.r_interval.hi < t.interval.hi);
            assert!(hole.r_interval.contains(t.x));
            if hole.case == HoleCase::FullHalfWidth {
                assert!((hole.ratio - 0.5).abs() < 1e-9);
            }
            for i in 0..=200 {
                let s = hole.r_interval.lo + hole.r_interval.len() * i as f64 / 200.0;
                let p = &line().position(s) + &psi.eval(s);
                assert!(p.distance(&hole.centre) < hole.radius);
                assert_eq!(o.contains_point(&p), false);
            }
        }
    }

    #[test]
    fn hole_interval_errors() {
        let sel = cover(5);
        let psi = build_tent(&line(), &sel, sel.chosen.len(), LAMBDA).unwrap();
        let o = fat(4);
        assert!(matches!(hole_interval(&line(), &psi, psi.len(), &o, 2.0), Err(Error::Precondition(_))));
        assert!(matches!(hole_interval(&line(), &psi, 0, &o, 0.5), Err(Error::Precondition(_))));
    }

    #[test]
    fn smooth_without_tents() {
        let sel = cover(1);
        let psi = build_tent(&line(), &sel, 0, LAMBDA).unwrap();
        let res = smooth(&line(), &psi, &[], 1e-3, THETA, 2.0).unwrap();
        assert_eq!(res.g, line());
        assert!(res.t_set.is_empty());
    }

    fn smoothed(seed: u64) -> (TentPerturbation, Vec<HoleIntervalResult>, SmoothingResult) {
        let sel = cover(seed);
        let psi = build_tent(&line(), &sel, sel.chosen.len(), LAMBDA).unwrap();
        let o = fat(4);
        let holes: Vec<_> = (0..psi.len()).map(|k| hole_interval(&line(), &psi, k, &o, 2.0).unwrap()).collect();
        let res = smooth(&line(), &psi, &holes, 1e-3, THETA, 2.0).unwrap();
        (psi, holes, res)
    }

    #[test]
    fn smooth_reference() {
        let (psi, holes, res) = smoothed(2);
        assert!(res.g.is_c1());
        assert!(res.sup_g_minus_f.upper < THETA);
        assert!(res.sup_dg_minus_df.upper <= 2.0 / LAMBDA * (1.0 + 1e-12));
        assert!(res.t_set.total_length() < 1e-3);
        for (t, h) in psi.tents().iter().zip(&holes) {
            assert!(res.g.position(t.x).distance(&h.centre) < h.radius);
        }
    }

    #[test]
    fn xi_integrals_match() {
        let (psi, _, res) = smoothed(9);
        for (t, &zeta) in psi.tents().iter().zip(&res.zetas) {
            let (a, b, x, rho) = (t.interval.lo, t.interval.hi, t.x, res.rho);
            for (lo, hi) in [(a, a + rho), (x - zeta, x + zeta), (b - rho, b)] {
                let lhs = &res.eta.position(hi) - &res.eta.position(lo);
                let rhs = &psi.eval(hi) - &psi.eval(lo);
                assert!(lhs.distance(&rhs) < 1e-15 * (1.0 + t.peak.norm()) + 1e-18);
            }
            let mid = res.eta.derivative_sides(a + 0.5 * rho).0;
            assert!(mid.distance(&t.rise().scale(1.5)) < 1e-9 * t.rise().norm());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn smoothing_holds_for_random_covers(seed in 0u64..1000) {
            let (psi, _, res) = smoothed(seed);
            prop_assert!(res.g.is_c1());
            prop_assert!(res.t_set.total_length() < 1e-3);
            prop_assert!(res.sup_g_minus_f.upper < THETA);
            for i in 0..=500 {
                let s = i as f64 / 500.0;
                if psi.tents().iter().all(|t| !t.interval.contains(s)) {
                    prop_assert!(res.g.position(s).distance(&line().position(s)) < 1e-15);
                }
            }
        }
    }
}
