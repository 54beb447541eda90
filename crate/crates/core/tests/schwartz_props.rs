mod common;

use common::{gram_of_dim, neg, phi, point, P};
use proptest::prelude::*;
use ttl_core::padic::int;
use ttl_core::{Cell, CycNum, SchwartzFn};

fn small_phi() -> impl Strategy<Value = SchwartzFn> {
    prop_oneof![phi(1, P, (-1, 2), 1, 4), phi(2, P, (-1, 1), 1, 3), phi(4, P, (0, 1), 0, 3)]
}

fn phi_and_point() -> impl Strategy<Value = (SchwartzFn, Vec<ttl_core::Rational>)> {
    small_phi().prop_flat_map(|f| {
        let n = f.dim();
        (Just(f), common::point(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn fourier_twice_is_reflection(f in small_phi()) {
        let s = gram_of_dim(f.dim());
        let ff = f.fourier(&s).unwrap().fourier(&s).unwrap();
        prop_assert!(ff.equals_ae(&neg(&f)));
    }

    #[test]
    fn plancherel(f in small_phi()) {
        let s = gram_of_dim(f.dim());
        let g = f.fourier(&s).unwrap();
        prop_assert_eq!(g.abs2().integrate(), f.abs2().integrate());
    }

    #[test]
    fn translation_becomes_modulation(
        (f, t) in small_phi().prop_flat_map(|f| {
            // translations in p^{-1} L, or L when n = 4, keep the transform small
            let d = if f.dim() == 4 { 1 } else { 3 };
            let n = f.dim();
            (Just(f), prop::collection::vec((-4i64..4).prop_map(move |z| ttl_core::padic::rat(z, d)), n))
        })
    ) {
        let s = gram_of_dim(f.dim());
        let lhs = f.translate(&t).fourier(&s).unwrap();
        let rhs = f.fourier(&s).unwrap().phase_mul_linear(&t, &s).unwrap();
        prop_assert!(lhs.equals_ae(&rhs));
    }

    #[test]
    fn refinement_changes_nothing((f, v) in phi_and_point(), extra in 0i64..2) {
        let m = f.max_level().unwrap_or(0) + extra;
        let g = f.refine(m).unwrap();
        prop_assert!(g.cells().all(|(c, _)| c.level() == m));
        prop_assert!(g.equals_ae(&f));
        prop_assert_eq!(g.integrate(), f.integrate());
        prop_assert_eq!(g.evaluate(&v).unwrap(), f.evaluate(&v).unwrap());
    }

    #[test]
    fn evaluation_is_linear(
        (f, g, v) in small_phi().prop_flat_map(|f| { let n = f.dim(); (Just(f), phi(n, P, (0, 1), 1, 3), point(n)) }),
        c in common::coeff(),
    ) {
        let h = f.add(&g.scale(&c)).unwrap();
        let expect = &f.evaluate(&v).unwrap() + &(&c * &g.evaluate(&v).unwrap());
        prop_assert_eq!(h.evaluate(&v).unwrap(), expect);
        prop_assert!(f.sub(&f).unwrap().is_zero());
    }

    #[test]
    fn pointwise_fourier_agrees((f, xi) in phi_and_point()) {
        let s = gram_of_dim(f.dim());
        prop_assert_eq!(f.fourier_at(&s, &xi).unwrap(), f.fourier(&s).unwrap().evaluate(&xi).unwrap());
    }

    #[test]
    fn integral_is_sum_of_volumes(f in small_phi()) {
        let p = f.p();
        let expect: CycNum = f.cells().map(|(c, x)| x.scale(&c.volume(p))).sum();
        prop_assert_eq!(f.integrate(), expect);
    }
}

#[test]
fn lattice_indicator_is_self_dual() {
    for n in [1, 2, 3, 4] {
        let s = gram_of_dim(n);
        let f = SchwartzFn::indicator(Cell::lattice(n, 0), P);
        assert_eq!(f.fourier(&s).unwrap(), f);
        let g = SchwartzFn::indicator(Cell::lattice(n, 1), P);
        let expect = SchwartzFn::indicator(Cell::lattice(n, -1), P).scale(&CycNum::from_rational(ttl_core::padic::p_pow(P, -(n as i64))));
        assert!(g.fourier(&s).unwrap().equals_ae(&expect));
        assert_eq!(f.integrate(), CycNum::one());
        assert_eq!(g.integrate(), CycNum::from_rational(ttl_core::padic::p_pow(P, -(n as i64))));
        assert_eq!(f.dilate(&int(3)), SchwartzFn::indicator(Cell::lattice(n, -1), P));
        assert_eq!(f.dilate(&int(2)), f);
    }
}
