use num_bigint::BigInt;
use proptest::prelude::*;
use ttl_core::padic::{self, abs_p, frac_part, hilbert_symbol, int, psi_char, rat, valuation};
use ttl_core::Rational;

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11])
}

/// Rationals with numerators and denominators divisible by small powers of `p`.
fn padic_rational(p: u64) -> impl Strategy<Value = Rational> {
    let p = p as i64;
    (-200i64..200, 1i64..50, 0u32..3, 0u32..3).prop_map(move |(n, d, a, b)| rat(n * p.pow(a), d * p.pow(b)))
}

fn nonzero(p: u64) -> impl Strategy<Value = Rational> {
    padic_rational(p).prop_filter("nonzero", |x| *x != int(0))
}

/// Whether `z^2 = a x^2 + b y^2` has a primitive solution mod `p^k`, which for odd
/// `p` and `k` past twice the valuations decides the Hilbert symbol.
fn solvable(a: i64, b: i64, p: i64, k: u32) -> bool {
    let m = p.pow(k);
    for x in 0..m {
        for y in 0..m {
            for z in 0..m {
                if (x % p != 0 || y % p != 0 || z % p != 0) && (z * z - a * x * x - b * y * y).rem_euclid(m) == 0 {
                    return true;
                }
            }
        }
    }
    false
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn psi_is_additive((p, x, y) in prime().prop_flat_map(|p| (Just(p), padic_rational(p), padic_rational(p)))) {
        prop_assert_eq!(psi_char(&(&x + &y), p), &psi_char(&x, p) * &psi_char(&y, p));
    }

    #[test]
    fn abs_is_multiplicative((p, x, y) in prime().prop_flat_map(|p| (Just(p), padic_rational(p), padic_rational(p)))) {
        prop_assert_eq!(abs_p(&(&x * &y), p), abs_p(&x, p) * abs_p(&y, p));
    }

    #[test]
    fn fractional_part_contract((p, x) in prime().prop_flat_map(|p| (Just(p), padic_rational(p)))) {
        let (a, k) = frac_part(&x, p);
        let pk = BigInt::from(p).pow(k);
        prop_assert!(a >= BigInt::from(0) && a < pk);
        let rest = &x - Rational::new(a, pk);
        prop_assert!(valuation(&rest, p).map_or(true, |v| v >= 0));
        let (v, abs, _) = padic::padic_profile(&x, p);
        if let Some(v) = v {
            prop_assert_eq!(abs, padic::p_pow(p, -v));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn hilbert_symbol_is_symmetric_and_bimultiplicative(
        (p, a, b, c) in prime().prop_flat_map(|p| (Just(p), nonzero(p), nonzero(p), nonzero(p)))
    ) {
        prop_assert_eq!(hilbert_symbol(&a, &b, p), hilbert_symbol(&b, &a, p));
        prop_assert_eq!(hilbert_symbol(&(&a * &b), &c, p), hilbert_symbol(&a, &c, p) * hilbert_symbol(&b, &c, p));
        prop_assert_eq!(hilbert_symbol(&a, &-a.clone(), p), 1);
        prop_assert_eq!(hilbert_symbol(&(&a * &a), &b, p), 1);
    }
}

#[test]
fn hilbert_symbol_matches_solvability() {
    for p in [3i64, 5] {
        for a in [1i64, 2, 3, 6, -1, -3, 5, 10, 15] {
            for b in [1i64, 2, 3, 6, -1, -3, 5, 10, 15] {
                let expected = if solvable(a, b, p, 3) { 1 } else { -1 };
                assert_eq!(hilbert_symbol(&int(a), &int(b), p as u64), expected, "({a},{b})_{p}");
            }
        }
    }
}
