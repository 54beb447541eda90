use proptest::prelude::*;
use ttl::random::{generate_random_phi, CoeffPool};
use ttl_core::Cell;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn generator_contract(
        seed in any::<u64>(),
        n in 1usize..=5,
        p in prop::sample::select(vec![3u64, 5, 7]),
        lo in -1i64..=1,
        width in 0i64..=2,
        radius in 0i64..=2,
        cells in 1usize..6,
    ) {
        let pool = CoeffPool::default();
        let a = generate_random_phi(seed, n, p, (lo, lo + width), radius, cells, &pool).unwrap();
        let b = generate_random_phi(seed, n, p, (lo, lo + width), radius, cells, &pool).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.is_disjoint());
        prop_assert!(a.len() <= cells);
        let outer = Cell::lattice(n, -radius);
        prop_assert!(a.cells().all(|(c, x)| outer.contains_cell(c, p) && !x.is_zero()));
    }
}

#[test]
fn different_seeds_differ() {
    let pool = CoeffPool::default();
    let draws: Vec<_> = (0..20).map(|s| generate_random_phi(s, 4, 3, (0, 2), 1, 3, &pool).unwrap()).collect();
    let distinct = draws.iter().enumerate().filter(|(i, f)| draws[..*i].iter().all(|g| g != *f)).count();
    assert!(distinct > 15);
}

#[test]
fn bad_pools_are_rejected() {
    let empty = CoeffPool { rationals: vec![], root_orders: vec![1] };
    assert!(generate_random_phi(0, 3, 3, (0, 1), 1, 2, &empty).is_err());
    let zero = CoeffPool { root_orders: vec![0], ..CoeffPool::default() };
    assert!(generate_random_phi(0, 3, 3, (0, 1), 1, 2, &zero).is_err());
    assert!(generate_random_phi(0, 3, 3, (2, 1), 1, 2, &CoeffPool::default()).is_err());
}
