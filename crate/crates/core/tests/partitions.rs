use num_rational::Rational64;
use paraproduct_core::dyadic::{build_cap_family, low_pass_symbol, DyadicSymbol};
use proptest::prelude::*;

/// Quintic smooth step on [2/3, 3/4], written out independently.
fn step(r: f64) -> f64 {
    let t = ((r - 2.0 / 3.0) * 12.0).clamp(0.0, 1.0);
    6.0 * t.powi(5) - 15.0 * t.powi(4) + 10.0 * t.powi(3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dyadic_bump_matches_oracle(r in 0.01f64..10.0) {
        let want = step(r) - step(r / 2.0);
        prop_assert!((DyadicSymbol.eval(r) - want).abs() < 1e-14);
    }

    #[test]
    fn low_pass_plus_pieces_is_one(r in 0.0f64..500.0, e in 0i32..6) {
        let mu = 2f64.powi(e);
        let mut total = low_pass_symbol(r, mu);
        let mut lam = mu;
        while lam <= 4.0 * r.max(1.0) {
            total += DyadicSymbol.eval(r / lam);
            lam *= 2.0;
        }
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateau_is_exactly_one(r in 0.75f64..=(4.0 / 3.0)) {
        prop_assert_eq!(DyadicSymbol.eval(r), 1.0);
    }

    #[test]
    fn cap_squares_sum_to_one(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let r = (x * x + y * y + z * z).sqrt();
        prop_assume!(r > 1e-3);
        let caps = build_cap_family(64.0, Rational64::new(2, 3)).unwrap();
        let dir = [x / r, y / r, z / r];
        let s: f64 = caps.weights(dir).iter().map(|p| p.1 * p.1).sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        let mirror: f64 = caps.weights([-dir[0], -dir[1], -dir[2]]).iter().map(|p| p.1 * p.1).sum();
        prop_assert!((mirror - 1.0).abs() < 1e-12);
    }
}

#[test]
fn antipodes_are_involutive() {
    let caps = build_cap_family(32.0, Rational64::new(2, 3)).unwrap();
    for i in 0..caps.len() {
        let j = caps.antipode(i);
        assert_eq!(caps.antipode(j), i);
        let (a, b) = (caps.centers()[i], caps.centers()[j]);
        assert_eq!([a[0], a[1], a[2]], [-b[0], -b[1], -b[2]]);
    }
}
