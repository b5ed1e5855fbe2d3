use proptest::prelude::*;
use rug::Rational;

use sptree::assembly::assemble_at;
use sptree::networks::{baseline_system, solve_networks_at, spantree_system, Flavor, Perturbation};
use sptree::series::{UnivariateSeries, Var};

const TRUNC: usize = 8;

fn rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=6).prop_map(|(n, d)| Rational::from((n, d)))
}

fn series() -> impl Strategy<Value = UnivariateSeries> {
    prop::collection::vec(rational(), TRUNC + 1).prop_map(|c| UnivariateSeries::from_rationals(Var::X, c))
}

/// Series with zero constant term.
fn small() -> impl Strategy<Value = UnivariateSeries> {
    series().prop_map(|s| {
        let mut s = s;
        *s.coeff_mut(0) = Rational::new();
        s
    })
}

fn positive_y() -> impl Strategy<Value = Rational> {
    (1i64..=12, 1i64..=6).prop_map(|(n, d)| Rational::from((n, d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ring_axioms(a in series(), b in series(), c in series()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        let one = UnivariateSeries::one(Var::X, (), TRUNC);
        prop_assert_eq!(&a * &one, a.clone());
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn reciprocal_inverts_units(a in series(), c0 in 1i64..=9) {
        let mut a = a;
        *a.coeff_mut(0) = Rational::from(c0);
        let one = UnivariateSeries::one(Var::X, (), TRUNC);
        prop_assert_eq!(&a * &a.reciprocal().unwrap(), one);
    }

    #[test]
    fn exp_is_a_homomorphism(a in small(), b in small()) {
        let lhs = (&a + &b).exp().unwrap();
        let rhs = &a.exp().unwrap() * &b.exp().unwrap();
        prop_assert_eq!(lhs, rhs);
        prop_assert_eq!(a.exp().unwrap().ln().unwrap(), a);
    }

    #[test]
    fn network_fixed_point_is_idempotent(y in positive_y()) {
        for sys in [spantree_system((), y.clone(), Perturbation::None), baseline_system((), y.clone())] {
            let sol = sys.solve(TRUNC).unwrap();
            sys.check_residual(&sol).unwrap();
            let again = sys.solve(TRUNC).unwrap();
            for name in sol.names() {
                prop_assert_eq!(sol.series(name), again.series(name));
                // a shorter solve is a prefix of the longer one
                let short = sys.solve(TRUNC - 3).unwrap();
                prop_assert_eq!(short.series(name), &sol.series(name).truncate(TRUNC - 3));
            }
        }
    }

    #[test]
    fn class_series_are_nonnegative(y in positive_y()) {
        for flavor in [Flavor::SpanningTree, Flavor::Baseline, Flavor::SecondMoment] {
            let b = solve_networks_at(flavor, TRUNC - 2, &y, Perturbation::None).unwrap();
            for name in b.names() {
                prop_assert!(b.s(name).is_nonnegative(), "{} {} at y = {}", flavor.name(), name, y);
            }
        }
        let a = assemble_at(TRUNC, &y).unwrap();
        for s in [&a.b, &a.c, &a.b_base, &a.c_base] {
            prop_assert!(s.is_nonnegative(), "assembled class at y = {}", y);
        }
    }
}
