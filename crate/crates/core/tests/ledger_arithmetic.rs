use num_rational::Rational64;
use paraproduct_core::ledger::{
    negativity_interval, parse_rational, threshold, AffineExponent, DeltaDomain, Threshold,
};
use proptest::prelude::*;

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Every reduced rational in (lo, hi] with denominator at most `max_den`.
fn scan(dom: &DeltaDomain, max_den: i64) -> impl Iterator<Item = Rational64> + '_ {
    (1..=max_den).flat_map(move |d| {
        let lo = (dom.lo * d).floor().to_integer();
        let hi = (dom.hi * d).ceil().to_integer();
        (lo..=hi).map(move |n| r(n, d)).filter(move |x| dom.contains(*x))
    })
}

fn brute_negative(e: &AffineExponent, dom: &DeltaDomain) -> bool {
    scan(dom, 1000).all(|x| e.eval(x) < r(0, 1))
}

#[test]
fn negativity_matches_scan_on_named_exponents() {
    let dom = DeltaDomain::default();
    for (a, b) in [((-3, 1), (2, 1)), ((-2, 1), (3, 1)), ((1, 1), (-2, 1)), ((1, 6), (-1, 1)), ((-9, 2), (5, 2))] {
        let e = AffineExponent::from_parts(a, b);
        let got = negativity_interval(&e, &dom);
        assert_eq!(got.always_negative, brute_negative(&e, &dom), "{e}");
        if let Some(w) = got.witness {
            assert!(dom.contains(w) && e.eval(w) >= r(0, 1), "{e} witness {w}");
        }
    }
}

#[test]
fn one_minus_two_delta_fails_with_witness() {
    let e = AffineExponent::from_parts((1, 1), (-2, 1));
    let n = negativity_interval(&e, &DeltaDomain::default());
    assert!(!n.always_negative);
    assert!(n.witness.is_some());
}

fn small_rational() -> impl Strategy<Value = Rational64> {
    (-40i64..=40, 1i64..=12).prop_map(|(n, d)| r(n, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn negativity_agrees_with_scan(a in small_rational(), b in small_rational()) {
        let e = AffineExponent::new(a, b);
        let dom = DeltaDomain::default();
        let got = negativity_interval(&e, &dom);
        prop_assert_eq!(got.always_negative, brute_negative(&e, &dom));
    }

    #[test]
    fn sums_are_order_independent(xs in proptest::collection::vec((small_rational(), small_rational()), 1..8)) {
        let es: Vec<AffineExponent> = xs.iter().map(|&(a, b)| AffineExponent::new(a, b)).collect();
        let forward: AffineExponent = es.iter().copied().sum();
        let backward: AffineExponent = es.iter().rev().copied().sum();
        prop_assert_eq!(forward, backward);
    }

    #[test]
    fn threshold_solves_equality(a in small_rational(), b in small_rational(), c in small_rational(), d in small_rational()) {
        let lhs = AffineExponent::new(a, b);
        let rhs = AffineExponent::new(c, d);
        match threshold(&lhs, &rhs) {
            Threshold::Crossing { delta, .. } => prop_assert_eq!(lhs.eval(delta), rhs.eval(delta)),
            Threshold::Parallel { equal } => {
                prop_assert_eq!(b, d);
                prop_assert_eq!(equal, a == c);
            }
        }
    }

    #[test]
    fn fractions_parse_exactly(n in -1000i64..1000, d in 1i64..1000) {
        let text = format!("{n}/{d}");
        prop_assert_eq!(parse_rational(&text).unwrap(), r(n, d));
    }
}

#[test]
fn decimals_become_exact_rationals() {
    assert_eq!(parse_rational("0.625").unwrap(), r(5, 8));
    assert_eq!(parse_rational("-4.75").unwrap(), r(-19, 4));
    assert_eq!(parse_rational("0.3333333333").unwrap(), r(1, 3));
}
