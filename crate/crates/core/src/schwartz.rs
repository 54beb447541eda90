//! Schwartz-Bruhat functions on `Q_p^n`: finite sums of coset indicators
//! `1_{c + p^k Z_p^n}` with [`CycNum`] coefficients.
//!
//! Two balls are either nested or disjoint, so any finite sum of indicators
//! resolves into a disjoint family; coarsening complete sibling families with
//! equal coefficients then yields the unique coarsest form, which is what
//! [`SchwartzFn::canonicalize`] produces and what equality is decided on.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{CycNum, CycSum};
use crate::padic::{self, ipow, ival, p_pow, reduce_mod_ppow, Rational};

/// The coset `c + p^level Z_p^n` with `c_i = coords[i] / p^scale`.
///
/// Canonical data: `0 <= coords[i] < p^(scale + level)`, `scale` minimal, and
/// all coordinates zero when `scale + level <= 0`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Cell {
    level: i64,
    scale: u32,
    coords: Vec<i128>,
}

impl Cell {
    fn canon(p: u64, level: i64, mut scale: u32, mut coords: Vec<i128>) -> Self {
        let top = scale as i64 + level;
        if top <= 0 {
            coords.iter_mut().for_each(|c| *c = 0);
            return Self { level, scale: 0, coords };
        }
        let m = ipow(p, top as u32);
        coords.iter_mut().for_each(|c| *c = c.rem_euclid(m));
        let pi = p as i128;
        while scale > 0 && coords.iter().all(|c| c % pi == 0) {
            coords.iter_mut().for_each(|c| *c /= pi);
            scale -= 1;
        }
        Self { level, scale, coords }
    }

    pub fn new(center: &[Rational], level: i64, p: u64) -> Self {
        let reduced: Vec<(BigInt, u32)> = center.iter().map(|x| reduce_mod_ppow(x, p, level)).collect();
        let scale = reduced.iter().map(|r| r.1).max().unwrap_or(0);
        let coords = reduced
            .into_iter()
            .map(|(a, s)| (a * padic::big_p_pow(p, scale - s)).to_i128().expect("cell center fits i128"))
            .collect();
        Self::canon(p, level, scale, coords)
    }

    /// `p^level Z_p^n`.
    pub fn lattice(n: usize, level: i64) -> Self {
        Self { level, scale: 0, coords: vec![0; n] }
    }

    pub fn level(&self) -> i64 {
        self.level
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn coords(&self) -> &[i128] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn center(&self, p: u64) -> Vec<Rational> {
        let d = padic::big_p_pow(p, self.scale);
        self.coords.iter().map(|&c| Rational::new(BigInt::from(c), d.clone())).collect()
    }

    /// The enclosing cell at level `k <= self.level`.
    pub fn ancestor(&self, k: i64, p: u64) -> Self {
        debug_assert!(k <= self.level);
        Self::canon(p, k, self.scale, self.coords.clone())
    }

    pub fn contains(&self, v: &[Rational], p: u64) -> bool {
        Cell::new(v, self.level, p) == *self
    }

    pub fn contains_cell(&self, other: &Cell, p: u64) -> bool {
        other.level >= self.level && other.ancestor(self.level, p) == *self
    }

    /// The `p^n` cells one level down.
    pub fn children(&self, p: u64) -> Vec<Cell> {
        let n = self.coords.len();
        let scale = self.scale.max((-self.level).max(0) as u32);
        let base: Vec<i128> = self.coords.iter().map(|c| c * ipow(p, scale - self.scale)).collect();
        let step = ipow(p, (scale as i64 + self.level) as u32);
        let total = (p as usize).pow(n as u32);
        let mut out = Vec::with_capacity(total);
        let mut digits = vec![0i128; n];
        for _ in 0..total {
            let coords = base.iter().zip(&digits).map(|(b, d)| b + d * step).collect();
            out.push(Self::canon(p, self.level + 1, scale, coords));
            for d in digits.iter_mut() {
                *d += 1;
                if *d < p as i128 {
                    break;
                }
                *d = 0;
            }
        }
        out
    }

    /// All descendants at level `m >= self.level`.
    pub fn descendants(&self, m: i64, p: u64) -> Vec<Cell> {
        let mut cur = vec![self.clone()];
        for _ in self.level..m {
            cur = cur.iter().flat_map(|c| c.children(p)).collect();
        }
        cur
    }

    pub fn volume(&self, p: u64) -> Rational {
        padic::ball_volume(self.level, self.coords.len(), p)
    }
}

/// A locally constant compactly supported function on `Q_p^n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SchwartzFn {
    n: usize,
    p: u64,
    cells: BTreeMap<Cell, CycNum>,
}

impl SchwartzFn {
    pub fn zero(n: usize, p: u64) -> Self {
        Self { n, p, cells: BTreeMap::new() }
    }

    pub fn indicator(cell: Cell, p: u64) -> Self {
        let n = cell.dim();
        let mut cells = BTreeMap::new();
        cells.insert(cell, CycNum::one());
        Self { n, p, cells }
    }

    /// Sum of `coeff * 1_cell` over possibly overlapping cells, canonicalized.
    pub fn from_terms<I>(n: usize, p: u64, terms: I) -> Self
    where
        I: IntoIterator<Item = (Cell, CycNum)>,
    {
        let mut merged: BTreeMap<Cell, CycNum> = BTreeMap::new();
        for (c, x) in terms {
            assert_eq!(c.dim(), n, "cell dimension");
            match merged.get_mut(&c) {
                Some(slot) => *slot = &*slot + &x,
                None => {
                    merged.insert(c, x);
                }
            }
        }
        let cells = resolve_overlaps(merged, p);
        let mut f = Self { n, p, cells };
        f.coarsen();
        f
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Cell, &CycNum)> {
        self.cells.iter()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn max_level(&self) -> Option<i64> {
        self.cells.keys().map(|c| c.level).max()
    }

    pub fn min_level(&self) -> Option<i64> {
        self.cells.keys().map(|c| c.level).min()
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.n != other {
            return Err(Error::DimensionMismatch { expected: self.n, got: other });
        }
        Ok(())
    }

    /// Coarsest representation: maximal balls on which the function is constant.
    pub fn canonicalize(&self) -> Self {
        let mut f = self.clone();
        f.coarsen();
        f
    }

    fn coarsen(&mut self) {
        self.cells.retain(|_, x| !x.is_zero());
        if self.cells.is_empty() {
            return;
        }
        let family = (self.p as usize).pow(self.n as u32);
        let mut by_level: BTreeMap<i64, BTreeMap<Cell, CycNum>> = BTreeMap::new();
        for (c, x) in core::mem::take(&mut self.cells) {
            by_level.entry(c.level).or_default().insert(c, x);
        }
        let mut out = BTreeMap::new();
        while let Some((&lvl, _)) = by_level.iter().next_back() {
            let layer = by_level.remove(&lvl).unwrap();
            let mut groups: BTreeMap<Cell, Vec<(Cell, CycNum)>> = BTreeMap::new();
            for (c, x) in layer {
                groups.entry(c.ancestor(lvl - 1, self.p)).or_default().push((c, x));
            }
            for (parent, kids) in groups {
                if kids.len() == family && kids.iter().all(|(_, x)| *x == kids[0].1) {
                    let x = kids.into_iter().next().unwrap().1;
                    by_level.entry(lvl - 1).or_default().insert(parent, x);
                } else {
                    out.extend(kids);
                }
            }
        }
        self.cells = out;
    }

    /// Same function with every cell split down to level `m`.
    pub fn refine(&self, m: i64) -> Result<Self> {
        if let Some(top) = self.max_level() {
            if m < top {
                return Err(Error::LevelTooSmall { level: m, cell_level: top });
            }
        }
        let mut cells = BTreeMap::new();
        for (c, x) in &self.cells {
            for d in c.descendants(m, self.p) {
                cells.insert(d, x.clone());
            }
        }
        Ok(Self { n: self.n, p: self.p, cells })
    }

    pub fn add(&self, g: &SchwartzFn) -> Result<Self> {
        self.check_dim(g.n)?;
        let terms = self.cells.iter().chain(g.cells.iter()).map(|(c, x)| (c.clone(), x.clone()));
        Ok(Self::from_terms(self.n, self.p, terms))
    }

    pub fn sub(&self, g: &SchwartzFn) -> Result<Self> {
        self.add(&g.scale(&CycNum::from_int(-1)))
    }

    pub fn scale(&self, s: &CycNum) -> Self {
        if s.is_zero() {
            return Self::zero(self.n, self.p);
        }
        let cells = self.cells.iter().map(|(c, x)| (c.clone(), x * s)).collect();
        Self { n: self.n, p: self.p, cells }
    }

    pub fn pointwise_mul(&self, g: &SchwartzFn) -> Result<Self> {
        self.check_dim(g.n)?;
        let mut terms = Vec::new();
        for (a, x) in &self.cells {
            for (b, y) in &g.cells {
                let inner = if a.level >= b.level { (b, a) } else { (a, b) };
                if inner.0.contains_cell(inner.1, self.p) {
                    terms.push((inner.1.clone(), x * y));
                }
            }
        }
        Ok(Self::from_terms(self.n, self.p, terms))
    }

    /// Pointwise `|f|^2`.
    pub fn abs2(&self) -> Self {
        let cells = self.cells.iter().map(|(c, x)| (c.clone(), x.abs2())).collect();
        Self { n: self.n, p: self.p, cells }
    }

    pub fn conj(&self) -> Self {
        let cells = self.cells.iter().map(|(c, x)| (c.clone(), x.conj())).collect();
        Self { n: self.n, p: self.p, cells }
    }

    pub fn evaluate(&self, v: &[Rational]) -> Result<CycNum> {
        self.check_dim(v.len())?;
        let mut levels: Vec<i64> = self.cells.keys().map(|c| c.level).collect();
        levels.dedup();
        levels.sort_unstable();
        levels.dedup();
        for k in levels {
            if let Some(x) = self.cells.get(&Cell::new(v, k, self.p)) {
                return Ok(x.clone());
            }
        }
        Ok(CycNum::zero())
    }

    /// `sum_cells coeff * p^{-level * n}`.
    pub fn integrate(&self) -> CycNum {
        self.cells.iter().map(|(c, x)| x.scale(&c.volume(self.p))).sum()
    }

    /// `f == g` as functions.
    pub fn equals_ae(&self, g: &SchwartzFn) -> bool {
        match self.sub(g) {
            Ok(d) => d.is_zero(),
            Err(_) => false,
        }
    }

    /// `v -> psi(<u, v>) f(v)` with `<u, v> = u^T S v`.
    pub fn phase_mul_linear(&self, u: &[Rational], gram: &[Vec<i64>]) -> Result<Self> {
        self.check_dim(u.len())?;
        let w = mat_vec(gram, u);
        let p = self.p;
        let need = w.iter().filter_map(|x| padic::valuation(x, p)).map(|v| -v).max().unwrap_or(i64::MIN);
        let form = IntForm::linear(&w, p);
        let mut memo = PhaseMemo::new(p);
        let mut cells = BTreeMap::new();
        for (idx, (c, x)) in self.cells.iter().enumerate() {
            let m = c.level.max(need);
            for d in c.descendants(m, p) {
                let y = memo.times(idx, x, form.linear_phase(&d, p));
                cells.insert(d, y);
            }
        }
        let mut f = Self { n: self.n, p, cells };
        f.coarsen();
        Ok(f)
    }

    /// `v -> psi(b q(v)) f(v)` with `q(v) = v^T S v / 2`; cells are split
    /// adaptively until `b q` is constant modulo `Z_p` on each.
    pub fn phase_mul_quadratic(&self, b: &Rational, gram: &[Vec<i64>]) -> Result<Self> {
        self.check_dim(gram.len())?;
        if b.is_zero() {
            return Ok(self.clone());
        }
        let p = self.p;
        let vb = padic::valuation(b, p).unwrap();
        let form = IntForm::quadratic(b, gram, p);
        let mut memo = PhaseMemo::new(p);
        let mut cells = BTreeMap::new();
        let mut stack: Vec<(Cell, usize)> = self.cells.keys().cloned().zip(0..).collect();
        let coeffs: Vec<&CycNum> = self.cells.values().collect();
        while let Some((c, idx)) = stack.pop() {
            let vsc = c_grad_val(gram, &c, p);
            if vb + 2 * c.level >= 0 && vb + c.level + vsc >= 0 {
                let y = memo.times(idx, coeffs[idx], form.quadratic_phase(gram, &c, p));
                cells.insert(c, y);
            } else {
                stack.extend(c.children(p).into_iter().map(|d| (d, idx)));
            }
        }
        let mut f = Self { n: self.n, p, cells };
        f.coarsen();
        Ok(f)
    }

    /// `F(f)(xi) = int f(y) psi(<xi, y>) dy` for a unimodular Gram matrix.
    pub fn fourier(&self, gram: &[Vec<i64>]) -> Result<Self> {
        self.check_dim(gram.len())?;
        check_self_dual(gram, self.p)?;
        if self.is_zero() {
            return Ok(self.clone());
        }
        let p = self.p as f64;
        let n = self.n as f64;
        let per_cell: f64 = self
            .cells
            .keys()
            .map(|c| {
                let vsc = min_val(&mat_vec(gram, &c.center(self.p)), self.p).unwrap_or(i64::MAX / 4);
                let m = (-c.level).max(-vsc);
                libm::pow(p, ((m + c.level) as f64) * n)
            })
            .sum();
        let (k, r) = self.grid_bounds();
        let width = libm::pow(p, (k + r) as f64);
        let grid = libm::pow(width, n) * width * n;
        if per_cell <= grid || width > 1.0e6 {
            self.fourier_by_cells(gram)
        } else {
            Ok(self.fourier_std_grid(k, r).compose_linear(gram))
        }
    }

    /// `F(f)(xi)` at a single point.
    pub fn fourier_at(&self, gram: &[Vec<i64>], xi: &[Rational]) -> Result<CycNum> {
        self.check_dim(xi.len())?;
        check_self_dual(gram, self.p)?;
        let p = self.p;
        let sxi = mat_vec(gram, xi);
        let vxi = min_val(xi, p);
        // psi(<S xi, c / p^s>) = zeta_{p^{K+s}}^{sum r_i c_i} with r_i = p^K (S xi)_i mod p^{K+s}
        let big_k = min_val(&sxi, p).map_or(0, |v| (-v).max(0));
        let smax = self.cells.keys().map(|c| c.scale).max().unwrap_or(0);
        let modulus = ipow(p, (big_k as u32) + smax);
        let fits = modulus.checked_mul(modulus).and_then(|m| m.checked_mul(self.n as i128)).is_some();
        let residues: Option<Vec<i128>> =
            if fits { sxi.iter().map(|x| padic::to_residue(x, p, big_k, modulus)).collect() } else { None };
        let mut acc = CycSum::new();
        for (c, x) in &self.cells {
            if vxi.is_some_and(|v| v < -c.level) {
                continue;
            }
            match &residues {
                Some(r) => {
                    let m = ipow(p, big_k as u32 + c.scale);
                    let e = r.iter().zip(&c.coords).map(|(a, b)| (a % m) * b.rem_euclid(m) % m).sum::<i128>() % m;
                    acc.add_rotated(x, &c.volume(p), m as u64, e as u64);
                }
                None => {
                    let phase = padic::psi_char(&dot(&sxi, &c.center(p)), p);
                    acc.add_scaled(&(x * &phase), &c.volume(p));
                }
            }
        }
        Ok(acc.finish())
    }

    /// `F(1_{c + p^k L}) = p^{-kn} psi(<., c>) 1_{p^{-k} L}`, summed over the cells.
    fn fourier_by_cells(&self, gram: &[Vec<i64>]) -> Result<Self> {
        let p = self.p;
        let mut terms = Vec::new();
        for (c, x) in &self.cells {
            let center = c.center(p);
            let coeff = x.scale(&c.volume(p));
            let modulation = SchwartzFn::indicator(Cell::lattice(self.n, -c.level), p);
            let g = modulation.phase_mul_linear(&center, gram)?;
            terms.extend(g.cells.into_iter().map(|(d, y)| (d, &y * &coeff)));
        }
        Ok(Self::from_terms(self.n, p, terms))
    }

    /// `(K, R)`: every cell refines to level `K` inside `p^{-R} L`.
    fn grid_bounds(&self) -> (i64, i64) {
        let k = self.cells.keys().map(|c| c.level).max().unwrap();
        let r = self.cells.keys().map(|c| (c.scale as i64).max(-c.level)).max().unwrap();
        (k, r.max(-k))
    }

    /// Fourier transform for the dot product, by separable DFTs over
    /// `p^{-R} L / p^K L`. Values are carried as integer vectors over
    /// `(coefficient class, power of zeta_N)` and converted once at the end.
    fn fourier_std_grid(&self, k: i64, r: i64) -> Self {
        let p = self.p;
        let n = self.n;
        let big_n = ipow(p, (k + r) as u32) as usize;
        let classes: Vec<CycNum> = {
            let mut v: Vec<CycNum> = Vec::new();
            for x in self.cells.values() {
                if !v.contains(x) {
                    v.push(x.clone());
                }
            }
            v
        };
        let width = classes.len() * big_n;
        let mut grid: BTreeMap<Vec<usize>, Vec<i64>> = BTreeMap::new();
        let lift = |d: &Cell| -> Vec<usize> {
            let up = ipow(p, (r - d.scale as i64) as u32);
            d.coords.iter().map(|&c| ((c * up).rem_euclid(big_n as i128)) as usize).collect()
        };
        for (c, x) in &self.cells {
            let j = classes.iter().position(|y| y == x).unwrap();
            for d in c.descendants(k, p) {
                let slot = grid.entry(lift(&d)).or_insert_with(|| vec![0; width]);
                slot[j * big_n] += 1;
            }
        }
        for axis in 0..n {
            let mut lines: BTreeMap<Vec<usize>, Vec<(usize, Vec<i64>)>> = BTreeMap::new();
            for (mut key, v) in core::mem::take(&mut grid) {
                let xi = key[axis];
                key[axis] = 0;
                lines.entry(key).or_default().push((xi, v));
            }
            for (key, entries) in lines {
                for xi in 0..big_n {
                    let mut acc = vec![0i64; width];
                    for (x, v) in &entries {
                        let shift = (xi * x) % big_n;
                        for (j, block) in v.chunks(big_n).enumerate() {
                            for (e, &cnt) in block.iter().enumerate() {
                                if cnt != 0 {
                                    acc[j * big_n + (e + shift) % big_n] += cnt;
                                }
                            }
                        }
                    }
                    if acc.iter().any(|&t| t != 0) {
                        let mut key = key.clone();
                        key[axis] = xi;
                        grid.insert(key, acc);
                    }
                }
            }
        }
        let scale = p_pow(p, -k * n as i64);
        let mut memo: BTreeMap<Vec<i64>, CycNum> = BTreeMap::new();
        let denom = Rational::from_integer(BigInt::from(ipow(p, k.max(0) as u32)));
        let mut cells = BTreeMap::new();
        for (key, v) in grid {
            let value = memo
                .entry(v)
                .or_insert_with_key(|v| {
                    let mut out = CycNum::zero();
                    for (j, block) in v.chunks(big_n).enumerate() {
                        let part: CycNum = block
                            .iter()
                            .enumerate()
                            .filter(|(_, &c)| c != 0)
                            .map(|(e, &c)| CycNum::zeta(big_n as u64, e as i64).scale(&Rational::from_integer(BigInt::from(c))))
                            .sum();
                        out = &out + &(&part * &classes[j]);
                    }
                    out.scale(&scale)
                })
                .clone();
            if value.is_zero() {
                continue;
            }
            // xi = X / p^K, taken modulo p^R
            let center: Vec<Rational> = key
                .iter()
                .map(|&x| Rational::from_integer(BigInt::from(x)) / &denom * p_pow(p, -k.min(0)))
                .collect();
            cells.insert(Cell::new(&center, r, p), value);
        }
        let mut f = Self { n, p, cells };
        f.coarsen();
        f
    }

    /// `xi -> f(S xi)` for `S` in `GL_n(Z_p)`.
    fn compose_linear(&self, s: &[Vec<i64>]) -> Self {
        let p = self.p;
        let terms = self.cells.iter().map(|(c, x)| (Cell::new(&solve(s, &c.center(p)), c.level, p), x.clone()));
        self.affine_image(terms)
    }

    /// `v -> f(h^{-1} v)` for `h` in `GL_n(Z_p)` given as an integer matrix.
    pub fn pushforward_linear(&self, h: &[Vec<i64>]) -> Self {
        let p = self.p;
        let terms = self.cells.iter().map(|(c, x)| {
            let hc = mat_vec(h, &c.center(p));
            (Cell::new(&hc, c.level, p), x.clone())
        });
        self.affine_image(terms)
    }

    /// `v -> f(a v)`, `a != 0`.
    pub fn dilate(&self, a: &Rational) -> Self {
        let p = self.p;
        let va = padic::valuation(a, p).expect("dilation by zero");
        if a.is_one() {
            return self.clone();
        }
        let ainv = a.recip();
        let unit = &ainv * p_pow(p, va);
        let terms = self.cells.iter().map(|(c, x)| {
            let level = c.level - va;
            let top = c.scale as i64 + c.level;
            if top <= 0 {
                return (Cell::lattice(self.n, level), x.clone());
            }
            let m = ipow(p, top as u32);
            let scale = c.scale as i64 + va;
            let fast = m.checked_mul(m).is_some() && (scale >= 0 || ipow(p, (-scale) as u32).checked_mul(m).is_some());
            if !fast {
                let ctr: Vec<Rational> = c.center(p).iter().map(|t| t * &ainv).collect();
                return (Cell::new(&ctr, level, p), x.clone());
            }
            // x / a = (x u^{-1}) / p^{va} with u the unit part of a
            let ui = padic::to_residue(&unit, p, 0, m).unwrap();
            let mut coords: Vec<i128> = c.coords.iter().map(|&z| (z * ui).rem_euclid(m)).collect();
            let scale = if scale >= 0 {
                scale as u32
            } else {
                let up = ipow(p, (-scale) as u32);
                coords.iter_mut().for_each(|z| *z *= up);
                0
            };
            (Cell::canon(p, level, scale, coords), x.clone())
        });
        self.affine_image(terms)
    }

    /// `v -> f(v - t)`.
    pub fn translate(&self, t: &[Rational]) -> Self {
        let p = self.p;
        let terms = self.cells.iter().map(|(c, x)| {
            let ctr: Vec<Rational> = c.center(p).iter().zip(t).map(|(a, b)| a + b).collect();
            (Cell::new(&ctr, c.level, p), x.clone())
        });
        self.affine_image(terms)
    }

    /// Image under a bijective affine map, which sends canonical forms to canonical forms.
    fn affine_image(&self, terms: impl Iterator<Item = (Cell, CycNum)>) -> Self {
        Self { n: self.n, p: self.p, cells: terms.collect() }
    }

    /// Construction from pairwise disjoint cells, rejecting overlaps.
    pub fn from_disjoint(n: usize, p: u64, cells: BTreeMap<Cell, CycNum>) -> Result<Self> {
        let mut f = Self { n, p, cells };
        if f.cells.keys().any(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: f.cells.keys().map(|c| c.dim()).find(|&d| d != n).unwrap() });
        }
        if !f.is_disjoint() {
            return Err(Error::InvalidArgument("cells overlap".into()));
        }
        f.coarsen();
        Ok(f)
    }

    pub fn is_disjoint(&self) -> bool {
        let cells: Vec<&Cell> = self.cells.keys().collect();
        for (i, a) in cells.iter().enumerate() {
            for b in &cells[i + 1..] {
                if a.contains_cell(b, self.p) || b.contains_cell(a, self.p) {
                    return false;
                }
            }
        }
        true
    }
}

/// Resolves a family of possibly nested balls into disjoint ones with summed coefficients.
fn resolve_overlaps(cells: BTreeMap<Cell, CycNum>, p: u64) -> BTreeMap<Cell, CycNum> {
    let mut levels: Vec<i64> = cells.keys().map(|c| c.level).collect();
    levels.sort_unstable();
    levels.dedup();
    let mut roots: BTreeMap<Cell, (CycNum, Vec<(Cell, CycNum)>)> = BTreeMap::new();
    let mut nested = Vec::new();
    for (c, x) in &cells {
        let outer = levels
            .iter()
            .take_while(|&&k| k < c.level)
            .map(|&k| c.ancestor(k, p))
            .find(|a| cells.contains_key(a));
        match outer {
            Some(_) => nested.push((c.clone(), x.clone())),
            None => {
                roots.insert(c.clone(), (x.clone(), Vec::new()));
            }
        }
    }
    for (c, x) in nested {
        let root = levels
            .iter()
            .map(|&k| c.ancestor(k, p))
            .find(|a| roots.contains_key(a))
            .unwrap();
        roots.get_mut(&root).unwrap().1.push((c, x));
    }
    let mut out = BTreeMap::new();
    for (c, (x, inside)) in roots {
        resolve(c, x, inside, p, &mut out);
    }
    out
}

fn resolve(ball: Cell, acc: CycNum, inside: Vec<(Cell, CycNum)>, p: u64, out: &mut BTreeMap<Cell, CycNum>) {
    if inside.is_empty() {
        if !acc.is_zero() {
            out.insert(ball, acc);
        }
        return;
    }
    let mut groups: BTreeMap<Cell, Vec<(Cell, CycNum)>> = BTreeMap::new();
    for (c, x) in inside {
        groups.entry(c.ancestor(ball.level + 1, p)).or_default().push((c, x));
    }
    if !acc.is_zero() {
        for child in ball.children(p) {
            if !groups.contains_key(&child) {
                out.insert(child, acc.clone());
            }
        }
    }
    for (child, items) in groups {
        let mut here = acc.clone();
        let mut deeper = Vec::new();
        for (c, x) in items {
            if c == child {
                here = &here + &x;
            } else {
                deeper.push((c, x));
            }
        }
        resolve(child, here, deeper, p, out);
    }
}

pub(crate) fn mat_vec(m: &[Vec<i64>], v: &[Rational]) -> Vec<Rational> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(Rational::zero(), |acc, (&a, x)| acc + x * Rational::from_integer(BigInt::from(a))))
        .collect()
}

pub(crate) fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

/// `q(v) = v^T S v / 2`.
pub(crate) fn quad_value(gram: &[Vec<i64>], v: &[Rational]) -> Rational {
    dot(v, &mat_vec(gram, v)) / Rational::from_integer(BigInt::from(2))
}

/// Determinant of a small integer matrix (Bareiss, exact).
pub(crate) fn int_det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    sign * a[n - 1][n - 1]
}


/// `v(S c)` for the center `c` of a cell; large when `S c = 0`.
fn c_grad_val(gram: &[Vec<i64>], c: &Cell, p: u64) -> i64 {
    gram.iter()
        .filter_map(|row| ival(row.iter().zip(&c.coords).map(|(&a, &b)| a as i128 * b).sum(), p))
        .min()
        .map_or(i64::MAX / 4, |v| v - c.scale as i64)
}

/// A phase `psi(num / (den p^e))` as an exponent of `zeta_{p^e}`, or an exact
/// rational when the modulus would overflow.
enum Phase {
    Root(u32, i128),
    Exact(Rational),
}

/// Integer data of a linear form `w / D` or of `b q`, `b = bn / D`, with `D = d p^a`, `p` not dividing `d`.
struct IntForm {
    num: Vec<BigInt>,
    unit_den: BigInt,
    a: u32,
    exact: Vec<Rational>,
    b: Rational,
}

impl IntForm {
    fn common(values: &[Rational], p: u64) -> (Vec<BigInt>, BigInt, u32) {
        use num_integer::Integer;
        let den = values.iter().fold(BigInt::from(1), |acc, x| acc.lcm(x.denom()));
        let a = padic::int_valuation(&den, p).unwrap_or(0) as u32;
        let unit_den = &den / padic::big_p_pow(p, a);
        let num = values.iter().map(|x| x.numer() * (&den / x.denom())).collect();
        (num, unit_den, a)
    }

    fn linear(w: &[Rational], p: u64) -> Self {
        let (num, unit_den, a) = Self::common(w, p);
        Self { num, unit_den, a, exact: w.to_vec(), b: Rational::zero() }
    }

    fn quadratic(b: &Rational, _gram: &[Vec<i64>], p: u64) -> Self {
        let two_b = b / Rational::from_integer(BigInt::from(2));
        let (num, unit_den, a) = Self::common(core::slice::from_ref(&two_b), p);
        Self { num, unit_den, a, exact: Vec::new(), b: b.clone() }
    }

    fn modulus(&self, e: u32, p: u64) -> Option<i128> {
        ((e as f64) * libm::log2(p as f64) < 62.0).then(|| ipow(p, e))
    }

    fn finish(&self, num: i128, e: u32, m: i128) -> Phase {
        let d = (&self.unit_den % BigInt::from(m)).to_i128().unwrap();
        let inv = padic::imod_inverse(d, m);
        Phase::Root(e, num.rem_euclid(m) * inv % m)
    }

    fn linear_phase(&self, c: &Cell, p: u64) -> Phase {
        let e = self.a + c.scale;
        match self.modulus(e, p) {
            Some(m) => {
                let bm = BigInt::from(m);
                let mut acc = 0i128;
                for (w, &x) in self.num.iter().zip(&c.coords) {
                    let wr = (w % &bm).to_i128().unwrap().rem_euclid(m);
                    acc = (acc + wr * x.rem_euclid(m) % m) % m;
                }
                self.finish(acc, e, m)
            }
            None => Phase::Exact(dot(&self.exact, &c.center(p))),
        }
    }

    fn quadratic_phase(&self, gram: &[Vec<i64>], c: &Cell, p: u64) -> Phase {
        // b q(c) = (b / 2) c^T S c
        let e = self.a + 2 * c.scale;
        match self.modulus(e, p) {
            Some(m) => {
                let x: Vec<i128> = c.coords.iter().map(|v| v.rem_euclid(m)).collect();
                let mut q = 0i128;
                for (i, row) in gram.iter().enumerate() {
                    for (j, &s) in row.iter().enumerate() {
                        if s != 0 {
                            q = (q + (s as i128).rem_euclid(m) * x[i] % m * x[j] % m) % m;
                        }
                    }
                }
                let bn = (&self.num[0] % BigInt::from(m)).to_i128().unwrap().rem_euclid(m);
                self.finish(bn * q % m, e, m)
            }
            None => Phase::Exact(&self.b * quad_value(gram, &c.center(p))),
        }
    }
}

/// Memo of `coeff * psi(phase)` per source cell.
struct PhaseMemo {
    p: u64,
    map: BTreeMap<(usize, u32, i128), CycNum>,
}

impl PhaseMemo {
    fn new(p: u64) -> Self {
        Self { p, map: BTreeMap::new() }
    }

    fn times(&mut self, idx: usize, x: &CycNum, phase: Phase) -> CycNum {
        match phase {
            Phase::Root(e, r) => {
                let p = self.p;
                self.map
                    .entry((idx, e, r))
                    .or_insert_with(|| x * &CycNum::zeta(p.pow(e), r as i64))
                    .clone()
            }
            Phase::Exact(t) => x * &padic::psi_char(&t, self.p),
        }
    }
}

fn check_self_dual(gram: &[Vec<i64>], p: u64) -> Result<()> {
    match ival(int_det(gram), p) {
        None => Err(Error::NotSelfDual(i64::MAX)),
        Some(v) if v > 0 => Err(Error::NotSelfDual(v)),
        _ => Ok(()),
    }
}

fn min_val(v: &[Rational], p: u64) -> Option<i64> {
    v.iter().filter_map(|x| padic::valuation(x, p)).min()
}

/// `S^{-1} v` by exact Gaussian elimination.
pub(crate) fn solve(s: &[Vec<i64>], v: &[Rational]) -> Vec<Rational> {
    let n = s.len();
    let mut a: Vec<Vec<Rational>> = s
        .iter()
        .zip(v)
        .map(|(row, b)| row.iter().map(|&x| Rational::from_integer(BigInt::from(x))).chain([b.clone()]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&i| !a[i][col].is_zero()).expect("invertible");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != col && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in col..=n {
                    let t = &a[col][j] * &f;
                    a[i][j] -= t;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};

    fn l(n: usize) -> Cell {
        Cell::lattice(n, 0)
    }

    fn ind(center: &[Rational], level: i64, p: u64) -> SchwartzFn {
        SchwartzFn::indicator(Cell::new(center, level, p), p)
    }

    #[test]
    fn indicator_evaluation() {
        let phi0 = SchwartzFn::indicator(l(4), 3);
        assert_eq!(phi0.evaluate(&[int(1), int(1), int(0), int(0)]).unwrap(), CycNum::one());
        assert!(phi0.evaluate(&[rat(1, 3), int(0), int(0), int(0)]).unwrap().is_zero());
        assert_eq!(phi0.integrate(), CycNum::one());
    }

    #[test]
    fn refine_splits() {
        let f = SchwartzFn::indicator(l(1), 3);
        let r = f.refine(1).unwrap();
        assert_eq!(r.len(), 3);
        assert!(r.cells().all(|(c, x)| c.level() == 1 && x.is_one()));
        assert_eq!(r.integrate(), f.integrate());
        assert!(f.equals_ae(&r));
        assert_eq!(r.canonicalize(), f);
    }

    #[test]
    fn combine_examples() {
        let f = ind(&[rat(1, 3)], 1, 3);
        assert!(f.add(&f.scale(&CycNum::from_int(-1))).unwrap().is_zero());
        let a = SchwartzFn::indicator(l(1), 3);
        let b = ind(&[int(0)], 1, 3);
        assert_eq!(a.pointwise_mul(&b).unwrap(), b);
        let s = ind(&[int(1)], 1, 3).add(&ind(&[int(2)], 1, 3)).unwrap();
        assert!(s.evaluate(&[int(0)]).unwrap().is_zero());
        let all = s.add(&b).unwrap();
        assert!(all.equals_ae(&a));
        assert!(!a.equals_ae(&b));
        let other = SchwartzFn::indicator(l(2), 3);
        assert!(matches!(a.add(&other), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn nested_overlaps_resolve() {
        // 1_{Z_3} + 2 * 1_{3 Z_3} is 3 on 3Z_3 and 1 elsewhere in Z_3
        let f = SchwartzFn::from_terms(
            1,
            3,
            [(l(1), CycNum::one()), (Cell::lattice(1, 1), CycNum::from_int(2))],
        );
        assert_eq!(f.evaluate(&[int(3)]).unwrap(), CycNum::from_int(3));
        assert_eq!(f.evaluate(&[int(1)]).unwrap(), CycNum::one());
        assert_eq!(f.integrate(), CycNum::from_rational(rat(5, 3)));
        assert!(f.is_disjoint());
    }

    #[test]
    fn linear_phase_example() {
        let f = SchwartzFn::indicator(l(1), 3);
        let g = f.phase_mul_linear(&[rat(1, 3)], &[vec![2]]).unwrap();
        // oracle: psi(2 * (1/3) * c) at c = 0, 1, 2
        for c in 0..3i64 {
            let expect = padic::psi_char(&rat(2 * c, 3), 3);
            assert_eq!(g.evaluate(&[int(c)]).unwrap(), expect);
        }
        assert_eq!(g.len(), 3);
        assert!(g.integrate().is_zero());
        assert_eq!(f.phase_mul_linear(&[int(0)], &[vec![2]]).unwrap(), f);
    }

    #[test]
    fn quadratic_phase_example() {
        let f = SchwartzFn::indicator(l(1), 3);
        let g = f.phase_mul_quadratic(&rat(1, 3), &[vec![2]]).unwrap();
        let z = CycNum::zeta(3, 1);
        assert_eq!(g.evaluate(&[int(0)]).unwrap(), CycNum::one());
        assert_eq!(g.evaluate(&[int(1)]).unwrap(), z);
        assert_eq!(g.evaluate(&[int(2)]).unwrap(), z);
        assert_eq!(f.phase_mul_quadratic(&int(5), &[vec![2]]).unwrap(), f);
    }

    #[test]
    fn fourier_examples() {
        let gram1 = [vec![2]];
        let f = SchwartzFn::indicator(l(1), 3);
        assert_eq!(f.fourier(&gram1).unwrap(), f);
        let g = SchwartzFn::indicator(Cell::lattice(1, 1), 3);
        let expect = SchwartzFn::indicator(Cell::lattice(1, -1), 3).scale(&CycNum::from_rational(rat(1, 3)));
        assert_eq!(g.fourier(&gram1).unwrap(), expect);
        assert!(matches!(f.fourier(&[vec![3]]), Err(Error::NotSelfDual(1))));
    }

    /// Riemann-sum oracle: `F(1_{3Z_3})(xi)` summed over level-3 cells of the support.
    #[test]
    fn fourier_riemann_sum_oracle() {
        let p = 3;
        for xi in [int(0), rat(1, 3), rat(2, 3), rat(1, 9), int(1)] {
            let mut acc = CycNum::zero();
            for y in 0..9i64 {
                let y = int(3 * y);
                acc = &acc + &padic::psi_char(&(int(2) * &xi * &y), p).scale(&rat(1, 27));
            }
            let g = SchwartzFn::indicator(Cell::lattice(1, 1), p).fourier(&[vec![2]]).unwrap();
            assert_eq!(g.evaluate(&[xi]).unwrap(), acc);
        }
    }

    #[test]
    fn cell_canonical_centers() {
        let a = Cell::new(&[rat(10, 3)], 0, 3);
        let b = Cell::new(&[rat(1, 3)], 0, 3);
        assert_eq!(a, b);
        assert_eq!(Cell::new(&[rat(1, 3)], -1, 3), Cell::lattice(1, -1));
        assert_eq!(b.center(3), vec![rat(1, 3)]);
        assert_eq!(Cell::new(&[rat(1, 2)], 1, 3).center(3), vec![int(2)]);
    }

    #[test]
    fn int_det_small() {
        assert_eq!(int_det(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(int_det(&[vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 2]]), 8);
    }
}
