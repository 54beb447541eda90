use num_complex::Complex64;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use ttl_core::padic::{int, rat};
use ttl_core::{CycNum, Rational};

const TOL: f64 = 1e-9;

fn small_rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=12).prop_map(|(n, d)| rat(n, d))
}

/// Orders of the shape `2^e 3^f 5^g` with small exponents.
fn order() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![1u64, 2, 3, 4, 5, 6, 8, 9, 12, 15, 24, 27, 45])
}

fn raw_terms() -> impl Strategy<Value = (u64, Vec<(u8, i64, Rational)>)> {
    (order(), prop::collection::vec((0u8..=1, -50i64..50, small_rational()), 0..6))
}

fn cyc() -> impl Strategy<Value = CycNum> {
    raw_terms().prop_map(|(n, t)| CycNum::from_terms(n, 3, t))
}

/// Direct float rendering of a raw term list.
fn float_of(n: u64, terms: &[(u8, i64, Rational)]) -> Complex64 {
    let s3 = 3f64.sqrt();
    terms
        .iter()
        .map(|(d, e, c)| {
            let c = c.to_f64().unwrap();
            let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (*e as f64) / n as f64);
            z * c * if *d == 1 { s3 } else { 1.0 }
        })
        .sum()
}

fn float(x: &CycNum) -> Complex64 {
    let (re, im) = x.to_float(53);
    Complex64::new(re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn canonical_form_is_idempotent(x in cyc()) {
        let again = CycNum::from_terms(x.order(), 3, x.terms().map(|(d, e, c)| (d, e as i64, c.clone())));
        prop_assert_eq!(again, x);
    }

    #[test]
    fn canonical_form_preserves_value((n, t) in raw_terms()) {
        let x = CycNum::from_terms(n, 3, t.clone());
        prop_assert!((float(&x) - float_of(n, &t)).norm() < TOL);
    }

    #[test]
    fn ring_axioms(x in cyc(), y in cyc(), z in cyc()) {
        prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
        prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        prop_assert_eq!(&x * &y, &y * &x);
        prop_assert_eq!(&x + &y, &y + &x);
        prop_assert!((&x - &x).is_zero());
    }

    #[test]
    fn norm_is_real_nonnegative(x in cyc()) {
        let n = float(&(&x * &x.conj()));
        prop_assert!(n.im.abs() < TOL && n.re > -TOL);
        prop_assert_eq!(x.abs2(), &x * &x.conj());
    }

    #[test]
    fn equality_is_sound(x in cyc(), y in cyc(), z in cyc()) {
        // Two expression trees for the same value, and one for a shifted value.
        let lhs = &(&x + &y) * &z;
        let rhs = &(&z * &x) + &(&y * &z);
        prop_assert_eq!(&lhs, &rhs);
        prop_assert!((float(&lhs) - float(&rhs)).norm() < TOL);
        let shifted = &rhs + &CycNum::one();
        prop_assert_ne!(&lhs, &shifted);
    }

    #[test]
    fn conjugation_is_an_involutive_automorphism(x in cyc(), y in cyc()) {
        prop_assert_eq!(x.conj().conj(), x.clone());
        prop_assert_eq!((&x * &y).conj(), &x.conj() * &y.conj());
        prop_assert!((float(&x.conj()) - float(&x).conj()).norm() < TOL);
    }

    #[test]
    fn inverse(x in cyc()) {
        if x.is_zero() {
            prop_assert!(x.inv().is_none());
        } else {
            let y = x.inv().unwrap();
            prop_assert!((&x * &y).is_one());
        }
    }
}

#[test]
fn full_sets_of_roots_vanish() {
    for n in [2u64, 3, 4, 8, 9, 12, 27, 45] {
        let s: CycNum = (0..n as i64).map(|a| CycNum::zeta(n, a)).sum();
        assert!(s.is_zero(), "order {n}");
    }
}

#[test]
fn primitive_root_sums_are_moebius() {
    // sum of primitive n-th roots is mu(n)
    for (n, mu) in [(1u64, 1i64), (2, -1), (3, -1), (4, 0), (6, 1), (9, 0), (15, 1), (30, -1)] {
        let s: CycNum = (0..n as i64).filter(|a| num_integer::gcd(*a as u64, n) == 1).map(|a| CycNum::zeta(n, a)).sum();
        assert_eq!(s, CycNum::from_rational(int(mu)), "order {n}");
    }
}

#[test]
fn sqrt_components_are_kept_apart() {
    // The quadratic Gauss sum at 3 equals i sqrt(3) numerically, but the formal root stays separate.
    let g = &CycNum::zeta(3, 1) - &CycNum::zeta(3, 2);
    let formal = &CycNum::zeta(4, 1) * &CycNum::sqrt_p(3);
    assert!((float(&g) - float(&formal)).norm() < TOL);
    assert_ne!(g, formal);
    assert_eq!(&CycNum::sqrt_p(3) * &CycNum::sqrt_p(3), CycNum::from_int(3));
}
