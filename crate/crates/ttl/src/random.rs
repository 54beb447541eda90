//! Seeded pseudo-random Schwartz functions.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use ttl_core::padic::{int, p_pow};
use ttl_core::{Cell, CycNum, Rational, SchwartzFn};

use crate::wire::RationalIn;
use crate::TtlError;

/// Coefficients are `r zeta_k^j` with `r` from `rationals` and `k` from `root_orders`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CoeffPool {
    pub rationals: Vec<RationalIn>,
    pub root_orders: Vec<u64>,
}

impl Default for CoeffPool {
    fn default() -> Self {
        let r = |s: &str| RationalIn::Str(s.into());
        Self { rationals: vec![r("1"), r("-1"), r("2"), r("1/2"), r("3")], root_orders: vec![1, 4] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RandomSpec {
    /// Number of functions to draw.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Cells per function (before overlap rejection).
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_levels")]
    pub level_range: (i64, i64),
    #[serde(default = "default_radius")]
    pub support_radius: i64,
    #[serde(default)]
    pub coeff_pool: CoeffPool,
}

fn default_count() -> usize {
    10
}
fn default_cells() -> usize {
    3
}
fn default_levels() -> (i64, i64) {
    (0, 2)
}
fn default_radius() -> i64 {
    1
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            count: default_count(),
            cells: default_cells(),
            level_range: default_levels(),
            support_radius: default_radius(),
            coeff_pool: CoeffPool::default(),
        }
    }
}

/// A deterministic function of `seed`: up to `cells` disjoint balls of level in
/// `level_range` (raised to at least `-support_radius`) inside `p^{-support_radius} L`.
pub fn generate_random_phi(
    seed: u64,
    n: usize,
    p: u64,
    level_range: (i64, i64),
    support_radius: i64,
    cells: usize,
    pool: &CoeffPool,
) -> Result<SchwartzFn, TtlError> {
    if pool.rationals.is_empty() || pool.root_orders.is_empty() {
        return Err(TtlError::Config("empty coefficient pool".into()));
    }
    if pool.root_orders.contains(&0) {
        return Err(TtlError::Config("root of unity of order 0".into()));
    }
    let (lo, hi) = level_range;
    if lo > hi {
        return Err(TtlError::Config(format!("empty level range {lo}..={hi}")));
    }
    let rats: Vec<Rational> = pool.rationals.iter().map(|r| r.value()).collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = lo.max(-support_radius);
    let hi = hi.max(lo);
    let mut chosen: BTreeMap<Cell, CycNum> = BTreeMap::new();
    for _ in 0..cells {
        let level = rng.gen_range(lo..=hi);
        let modulus = (p as i64).pow((level + support_radius) as u32);
        let scale = p_pow(p, -support_radius);
        let center: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(0..modulus)) * &scale).collect();
        let cell = Cell::new(&center, level, p);
        let r = &rats[rng.gen_range(0..rats.len())];
        let k = pool.root_orders[rng.gen_range(0..pool.root_orders.len())];
        let coeff = CycNum::zeta(k, rng.gen_range(0..k as i64)).scale(r);
        if coeff.is_zero() || chosen.keys().any(|c| c.contains_cell(&cell, p) || cell.contains_cell(c, p)) {
            continue;
        }
        chosen.insert(cell, coeff);
    }
    SchwartzFn::from_disjoint(n, p, chosen).map_err(TtlError::Core)
}
