mod common;

use common::{phi, space, space_of_dim, P};
use proptest::prelude::*;
use ttl_core::padic::{int, p_pow, psi_char, rat};
use ttl_core::transfer::{
    basic_f_value, basic_phi, p_value, restrict_x, transfer_transform, whittaker_orbital, whittaker_orbital_truncated,
    x_transfer_value,
};
use ttl_core::{Cell, CycNum, Rational, SL2Elt, SchwartzFn};

fn grid() -> Vec<Rational> {
    vec![int(1), int(2), int(3), int(9), rat(1, 3), rat(2, 3)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn left_unipotent_equivariance(
        f in phi(4, P, (0, 1), 0, 3),
        x in prop::sample::select(vec![int(1), rat(1, 3), rat(2, 9), rat(5, 3)]),
        g in prop::sample::select(vec![SL2Elt::identity(), SL2Elt::w(), SL2Elt::t(&int(3)), SL2Elt::n(&rat(1, 3))]),
    ) {
        let qs = space_of_dim(4, P);
        let lhs = p_value(&f, &SL2Elt::n(&x).mul(&g), &qs).unwrap();
        let rhs = &psi_char(&x, P) * &p_value(&f, &g, &qs).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn transfer_identity(f in phi(3, P, (0, 1), 0, 3), i in 0usize..6) {
        let qs = space_of_dim(3, P);
        let a = &grid()[i];
        let w = whittaker_orbital(&f, a, &qs).unwrap();
        prop_assert_eq!(x_transfer_value(&f, a, &qs).unwrap(), w.value.clone());
        // once certified, deeper truncations agree
        for big_n in w.stabilized_at..w.stabilized_at + 2 {
            let (v, stable) = whittaker_orbital_truncated(&f, a, big_n, &qs).unwrap();
            prop_assert!(stable);
            prop_assert_eq!(&v, &w.value);
        }
    }
}

#[test]
fn basic_function_on_the_torus() {
    let qs = space_of_dim(4, P);
    assert_eq!(basic_f_value(&qs, &SL2Elt::identity()).unwrap(), CycNum::one());
    assert_eq!(basic_f_value(&qs, &SL2Elt::t(&int(9))).unwrap(), CycNum::from_rational(p_pow(P, -4)));
    assert!(basic_f_value(&qs, &SL2Elt::t(&rat(1, 3))).unwrap().is_zero());
    assert_eq!(basic_f_value(&qs, &SL2Elt::w()).unwrap(), CycNum::one());
}

#[test]
fn transfer_factors_through_restriction() {
    for qs in [space(1, &[1], P), space_of_dim(4, P)] {
        let n = qs.n();
        let phi0 = basic_phi(&qs);
        // q takes values in 9 Z_p on 3L, which misses X_1
        let extra = SchwartzFn::indicator(Cell::lattice(n, 1), P).scale(&CycNum::from_int(5));
        let phi1 = phi0.add(&extra).unwrap();
        assert!(restrict_x(&phi0, &qs).unwrap().equals(&restrict_x(&phi1, &qs).unwrap()).unwrap());
        for a in grid() {
            assert_eq!(x_transfer_value(&phi0, &a, &qs).unwrap(), x_transfer_value(&phi1, &a, &qs).unwrap());
        }
    }
}

#[test]
fn fiberwise_transform_matches_away_from_v1() {
    let qs = space(1, &[1], P);
    let v1 = qs.v1_rational();
    let minus: Vec<Rational> = v1.iter().map(|x| -x).collect();
    let cut = |c: &[Rational]| SchwartzFn::indicator(Cell::new(c, 1, P), P);
    let f = basic_phi(&qs).sub(&cut(&v1)).unwrap().sub(&cut(&minus)).unwrap();
    let xf = restrict_x(&f, &qs).unwrap();
    for a in [int(1), int(2), rat(1, 3)] {
        let t = transfer_transform(&xf, &a, &qs).unwrap();
        assert_eq!(t.value, x_transfer_value(&f, &a, &qs).unwrap(), "a = {a}");
    }
}
