#![allow(dead_code)]

use proptest::prelude::*;
use ttl_core::padic::{int, p_pow, rat};
use ttl_core::{Cell, CycNum, QuadSpace, Rational, SchwartzFn};

pub const P: u64 = 3;

/// `H^planes + <2 d_1, ...>`.
pub fn gram(planes: usize, diag: &[i64]) -> Vec<Vec<i64>> {
    let n = 2 * planes + diag.len();
    let mut g = vec![vec![0i64; n]; n];
    for i in 0..planes {
        g[2 * i][2 * i + 1] = 1;
        g[2 * i + 1][2 * i] = 1;
    }
    for (j, d) in diag.iter().enumerate() {
        g[2 * planes + j][2 * planes + j] = 2 * d;
    }
    g
}

/// Gram matrix of a unimodular form of dimension `n`.
pub fn gram_of_dim(n: usize) -> Vec<Vec<i64>> {
    if n % 2 == 0 {
        gram(n / 2, &[])
    } else {
        gram(n / 2, &[1])
    }
}

pub fn space(planes: usize, diag: &[i64], p: u64) -> QuadSpace {
    let g = gram(planes, diag);
    let mut v1 = vec![0i64; g.len()];
    v1[0] = 1;
    v1[1] = 1;
    QuadSpace::new(g, v1, p).unwrap()
}

pub fn space_of_dim(n: usize, p: u64) -> QuadSpace {
    if n % 2 == 0 {
        space(n / 2, &[], p)
    } else {
        space(n / 2, &[1], p)
    }
}

pub fn coeff() -> impl Strategy<Value = CycNum> {
    (prop::sample::select(vec![1i64, -1, 2, 3]), 0i64..4).prop_map(|(r, e)| CycNum::zeta(4, e).scale(&int(r)))
}

/// Sums of up to `cells` coset indicators of level in `levels`, centred in `p^{-radius} L`.
pub fn phi(n: usize, p: u64, levels: (i64, i64), radius: i64, cells: usize) -> impl Strategy<Value = SchwartzFn> {
    let cell = (levels.0..=levels.1).prop_flat_map(move |level| {
        let m = (p as i64).pow((level.max(-radius) + radius) as u32);
        (Just(level), prop::collection::vec(0..m, n), coeff())
    });
    prop::collection::vec(cell, 1..=cells).prop_map(move |terms| {
        let scale = p_pow(p, -radius);
        SchwartzFn::from_terms(
            n,
            p,
            terms.into_iter().map(|(level, c, x)| {
                let center: Vec<Rational> = c.into_iter().map(|z| int(z) * &scale).collect();
                (Cell::new(&center, level, p), x)
            }),
        )
    })
}

/// Points of `p^{-2} L` with small coordinates.
pub fn point(n: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-40i64..40).prop_map(|z| rat(z, 9)), n)
}

pub fn neg(f: &SchwartzFn) -> SchwartzFn {
    let n = f.dim();
    let m: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { -1 } else { 0 }).collect()).collect();
    f.pushforward_linear(&m)
}
