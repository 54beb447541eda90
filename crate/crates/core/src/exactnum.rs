//! Exact scalars: rational combinations of roots of unity, optionally times a
//! formal `sqrt(p)`.
//!
//! A value is stored in the canonical basis of `Q(zeta_N)`: for each prime
//! power `q^e || N` the exponent's `q`-component `c` (via CRT) must satisfy
//! `c / q^(e-1) < q - 1`. Exponents violating this are rewritten with
//! `sum_{t < q} zeta^(j + t N / q) = 0`. The basis is compatible under
//! `N | M`, so shrinking `N` to the gcd of the exponents gives the least order
//! and equality of canonical forms is equality of complex numbers.
//!
//! The formal `sqrt(p)` is never identified with a Gauss sum: degree-0 and
//! degree-1 parts are compared separately.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::padic::Rational;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNum {
    order: u64,
    /// Prime under the formal square root; 0 when no degree-1 term is present.
    sqrtp: u64,
    /// `(sqrt degree, exponent mod order) -> coefficient`, no zero entries.
    terms: BTreeMap<(u8, u64), Rational>,
}

fn prime_powers(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut e = 0;
            while n % d == 0 {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn lcm(a: u64, b: u64) -> u64 {
    a / a.gcd(&b) * b
}

fn mod_inv_u64(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    crate::padic::imod_inverse(a as i128, m as i128) as u64
}

impl CycNum {
    pub fn zero() -> Self {
        Self { order: 1, sqrtp: 0, terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::from_rational(Rational::one())
    }

    pub fn from_rational(r: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert((0, 0), r);
        }
        Self { order: 1, sqrtp: 0, terms }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(Rational::from_integer(BigInt::from(n)))
    }

    /// `e^{2 pi i a / N}`.
    pub fn zeta(order: u64, exp: i64) -> Self {
        assert!(order >= 1, "root order must be positive");
        let e = exp.rem_euclid(order as i64) as u64;
        let mut terms = BTreeMap::new();
        terms.insert((0, e), Rational::one());
        Self::canonical(order, 0, terms)
    }

    /// The formal `sqrt(p)`.
    pub fn sqrt_p(p: u64) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert((1, 0), Rational::one());
        Self { order: 1, sqrtp: p, terms }
    }

    /// Builds a value from raw `(sqrt degree, exponent, coefficient)` triples.
    pub fn from_terms<I>(order: u64, sqrtp: u64, terms: I) -> Self
    where
        I: IntoIterator<Item = (u8, i64, Rational)>,
    {
        assert!(order >= 1);
        let mut map: BTreeMap<(u8, u64), Rational> = BTreeMap::new();
        for (deg, exp, c) in terms {
            assert!(deg <= 1, "sqrt degree must be 0 or 1");
            let e = exp.rem_euclid(order as i64) as u64;
            let slot = map.entry((deg, e)).or_insert_with(Rational::zero);
            *slot += c;
        }
        Self::canonical(order, sqrtp, map)
    }

    fn canonical(order: u64, sqrtp: u64, mut terms: BTreeMap<(u8, u64), Rational>) -> Self {
        for (q, e) in prime_powers(order) {
            let nq = q.pow(e);
            let rest = order / nq;
            let inv = mod_inv_u64(rest % nq, nq);
            let step = order / q;
            let top = q.pow(e - 1);
            let bad: Vec<(u8, u64)> = terms
                .keys()
                .filter(|&&(_, j)| ((j % nq) * inv % nq) / top == q - 1)
                .copied()
                .collect();
            for key in bad {
                let c = terms.remove(&key).unwrap();
                if c.is_zero() {
                    continue;
                }
                let (deg, j) = key;
                for t in 1..q {
                    let jj = (j + t * step) % order;
                    let slot = terms.entry((deg, jj)).or_insert_with(Rational::zero);
                    *slot -= &c;
                }
            }
        }
        terms.retain(|_, c| !c.is_zero());
        let mut g = order;
        for &(_, j) in terms.keys() {
            g = g.gcd(&j);
        }
        let (order, terms) = if terms.is_empty() {
            (1, terms)
        } else if g > 1 {
            (order / g, terms.into_iter().map(|((d, j), c)| ((d, j / g), c)).collect())
        } else {
            (order, terms)
        };
        let sqrtp = if terms.keys().any(|&(d, _)| d == 1) { sqrtp } else { 0 };
        Self { order, sqrtp, terms }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn sqrtp(&self) -> u64 {
        self.sqrtp
    }

    /// Canonical terms as `(sqrt degree, exponent, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (u8, u64, &Rational)> {
        self.terms.iter().map(|(&(d, e), c)| (d, e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.as_rational().map(|r| r.is_one()).unwrap_or(false)
    }

    /// `Some(r)` when the value is the rational `r`.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        if self.order == 1 && self.terms.len() == 1 {
            if let Some(c) = self.terms.get(&(0, 0)) {
                return Some(c.clone());
            }
        }
        None
    }

    /// Degree-0 and degree-1 parts `(a, b)` with `self = a + b sqrt(p)`.
    pub fn split_sqrt(&self) -> (CycNum, CycNum) {
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        for (&(d, e), c) in &self.terms {
            if d == 0 {
                a.insert((0, e), c.clone());
            } else {
                b.insert((0, e), c.clone());
            }
        }
        (Self::canonical(self.order, 0, a), Self::canonical(self.order, 0, b))
    }

    fn merged_sqrtp(&self, other: &Self) -> u64 {
        match (self.sqrtp, other.sqrtp) {
            (0, q) | (q, 0) => q,
            (a, b) => {
                assert_eq!(a, b, "mixing formal square roots of different primes");
                a
            }
        }
    }

    fn lifted(&self, order: u64) -> impl Iterator<Item = ((u8, u64), &Rational)> {
        let f = order / self.order;
        self.terms.iter().map(move |(&(d, e), c)| ((d, e * f), c))
    }

    pub fn scale(&self, r: &Rational) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Self {
            order: self.order,
            sqrtp: self.sqrtp,
            terms: self.terms.iter().map(|(k, c)| (*k, c * r)).collect(),
        }
    }

    pub fn conj(&self) -> Self {
        let n = self.order;
        let terms = self.terms.iter().map(|(&(d, e), c)| ((d, (n - e) % n), c.clone())).collect();
        Self::canonical(n, self.sqrtp, terms)
    }

    /// `x * conj(x)`.
    pub fn abs2(&self) -> Self {
        self * &self.conj()
    }

    /// The Galois automorphism `zeta_N -> zeta_N^k`, fixing the formal root.
    pub fn galois(&self, k: u64) -> Self {
        let n = self.order;
        let terms = self.terms.iter().map(|(&(d, e), c)| ((d, e * (k % n) % n), c.clone())).collect();
        Self::canonical(n, self.sqrtp, terms)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let (a, b) = self.split_sqrt();
        if !b.is_zero() {
            // (a + b r)^{-1} = (a - b r) / (a^2 - p b^2)
            let p = self.sqrtp;
            let norm = &(&a * &a) - &(&b * &b).scale(&Rational::from_integer(BigInt::from(p)));
            let ninv = norm.inv()?;
            let conj = &a - &(&b * &Self::sqrt_p(p));
            return Some(&conj * &ninv);
        }
        if let Some(r) = a.as_rational() {
            return Some(Self::from_rational(r.recip()));
        }
        let n = a.order;
        let mut others = Self::one();
        for k in 2..n {
            if k.gcd(&n) == 1 {
                others = &others * &a.galois(k);
            }
        }
        let norm = (&others * &a).as_rational().expect("field norm is rational");
        Some(others.scale(&norm.recip()))
    }

    pub fn pow(&self, e: i64) -> Option<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut out = Self::one();
        for _ in 0..e.unsigned_abs() {
            out = &out * &base;
        }
        Some(out)
    }

    /// Complex approximation `(re, im)`; `sqrt(p)` is rendered numerically.
    ///
    /// Double precision bounds the attainable accuracy at roughly 50 bits.
    pub fn to_float(&self, precision_bits: u32) -> (f64, f64) {
        assert!(precision_bits >= 24, "precision below 24 bits");
        let mut re = 0.0;
        let mut im = 0.0;
        let root = libm::sqrt(self.sqrtp as f64);
        for (&(d, e), c) in &self.terms {
            let mag = rational_to_f64(c) * if d == 1 { root } else { 1.0 };
            let theta = 2.0 * core::f64::consts::PI * (e as f64) / (self.order as f64);
            re += mag * libm::cos(theta);
            im += mag * libm::sin(theta);
        }
        (re, im)
    }
}

pub(crate) fn rational_to_f64(r: &Rational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_f64(), r.denom().to_f64()) {
        if n.is_finite() && d.is_finite() {
            return n / d;
        }
    }
    // Very large numerator/denominator: shift both down.
    let bits = r.numer().bits().max(r.denom().bits()) as i64 - 900;
    let shift = bits.max(0) as u32;
    let n = (r.numer().abs() >> shift).to_f64().unwrap_or(0.0);
    let d = (r.denom() >> shift).to_f64().unwrap_or(1.0);
    let v = if d == 0.0 { 0.0 } else { n / d };
    if r.is_negative() {
        -v
    } else {
        v
    }
}

impl<'a> Add<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let order = lcm(self.order, rhs.order);
        let sqrtp = self.merged_sqrtp(rhs);
        let mut terms: BTreeMap<(u8, u64), Rational> = BTreeMap::new();
        for (k, c) in self.lifted(order).chain(rhs.lifted(order)) {
            let slot = terms.entry(k).or_insert_with(Rational::zero);
            *slot += c;
        }
        CycNum::canonical(order, sqrtp, terms)
    }
}

impl<'a> Sub<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        self + &(-rhs)
    }
}

impl<'a> Neg for &'a CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum {
            order: self.order,
            sqrtp: self.sqrtp,
            terms: self.terms.iter().map(|(k, c)| (*k, -c)).collect(),
        }
    }
}

impl<'a> Mul<&'a CycNum> for &'a CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        if self.is_zero() || rhs.is_zero() {
            return CycNum::zero();
        }
        if let Some(r) = rhs.as_rational() {
            return self.scale(&r);
        }
        if let Some(r) = self.as_rational() {
            return rhs.scale(&r);
        }
        let order = lcm(self.order, rhs.order);
        let sqrtp = self.merged_sqrtp(rhs);
        let mut terms: BTreeMap<(u8, u64), Rational> = BTreeMap::new();
        let left: Vec<_> = self.lifted(order).collect();
        let right: Vec<_> = rhs.lifted(order).collect();
        for ((d1, e1), c1) in &left {
            for ((d2, e2), c2) in &right {
                let mut c = *c1 * *c2;
                let mut d = d1 + d2;
                if d == 2 {
                    c *= Rational::from_integer(BigInt::from(sqrtp));
                    d = 0;
                }
                let slot = terms.entry((d, (e1 + e2) % order)).or_insert_with(Rational::zero);
                *slot += c;
            }
        }
        CycNum::canonical(order, sqrtp, terms)
    }
}

macro_rules! owned_ops {
    ($tr:ident, $f:ident) => {
        impl $tr<CycNum> for CycNum {
            type Output = CycNum;
            fn $f(self, rhs: CycNum) -> CycNum {
                (&self).$f(&rhs)
            }
        }
        impl<'a> $tr<&'a CycNum> for CycNum {
            type Output = CycNum;
            fn $f(self, rhs: &CycNum) -> CycNum {
                (&self).$f(rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        -&self
    }
}

/// In-place accumulator for long sums; reduces to canonical form once.
#[derive(Clone, Debug)]
pub struct CycSum {
    order: u64,
    sqrtp: u64,
    terms: BTreeMap<(u8, u64), Rational>,
}

impl Default for CycSum {
    fn default() -> Self {
        Self::new()
    }
}

impl CycSum {
    pub fn new() -> Self {
        Self { order: 1, sqrtp: 0, terms: BTreeMap::new() }
    }

    fn widen(&mut self, order: u64, sqrtp: u64) {
        let order = lcm(self.order, order);
        if order != self.order {
            let f = order / self.order;
            self.terms = core::mem::take(&mut self.terms).into_iter().map(|((d, e), c)| ((d, e * f), c)).collect();
            self.order = order;
        }
        self.sqrtp = match (self.sqrtp, sqrtp) {
            (0, q) | (q, 0) => q,
            (a, b) => {
                assert_eq!(a, b, "mixing formal square roots of different primes");
                a
            }
        };
    }

    pub fn add(&mut self, x: &CycNum) {
        self.add_rotated(x, &Rational::one(), 1, 0);
    }

    /// Adds `r x`.
    pub fn add_scaled(&mut self, x: &CycNum, r: &Rational) {
        self.add_rotated(x, r, 1, 0);
    }

    /// Adds `r zeta_order^exp x`.
    pub fn add_rotated(&mut self, x: &CycNum, r: &Rational, order: u64, exp: u64) {
        if x.is_zero() || r.is_zero() {
            return;
        }
        self.widen(lcm(order, x.order), x.sqrtp);
        let total = self.order;
        let shift = (exp % order) * (total / order) % total;
        for ((d, e), c) in x.lifted(total) {
            let slot = self.terms.entry((d, (e + shift) % total)).or_insert_with(Rational::zero);
            *slot += c * r;
        }
    }

    pub fn finish(self) -> CycNum {
        CycNum::canonical(self.order, self.sqrtp, self.terms)
    }
}

impl core::iter::Sum for CycNum {
    fn sum<I: Iterator<Item = CycNum>>(iter: I) -> CycNum {
        let mut acc = CycSum::new();
        for x in iter {
            acc.add(&x);
        }
        acc.finish()
    }
}

impl From<Rational> for CycNum {
    fn from(r: Rational) -> Self {
        Self::from_rational(r)
    }
}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(d, e), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if e != 0 {
                write!(f, "*z{}^{}", self.order, e)?;
            }
            if d == 1 {
                write!(f, "*sqrt({})", self.sqrtp)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::{int, rat};

    fn close(x: &CycNum, re: f64, im: f64) -> bool {
        let (a, b) = x.to_float(48);
        (a - re).abs() < 1e-12 && (b - im).abs() < 1e-12
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(CycNum::zeta(1, 0), CycNum::one());
        assert_eq!(CycNum::zeta(3, 1) + CycNum::zeta(3, 2), CycNum::from_int(-1));
        assert_eq!(CycNum::zeta(9, 11), CycNum::zeta(9, 2));
        assert_eq!(CycNum::zeta(9, 3), CycNum::zeta(3, 1));
        assert_eq!(CycNum::zeta(2, 1), CycNum::from_int(-1));
        assert_eq!(CycNum::zeta(6, 1), -CycNum::zeta(3, 2));
    }

    #[test]
    fn arith_examples() {
        let i = CycNum::zeta(4, 1);
        assert_eq!(&i * &i, CycNum::from_int(-1));
        let r = CycNum::sqrt_p(3);
        assert_eq!(&r * &r, CycNum::from_int(3));
        assert_eq!(CycNum::zeta(5, 2).conj(), CycNum::zeta(5, 3));
    }

    #[test]
    fn abs2_examples() {
        assert_eq!(CycNum::zeta(8, 1).abs2(), CycNum::one());
        assert_eq!(CycNum::zeta(3, 1).scale(&int(2)).abs2(), CycNum::from_int(4));
        let x = CycNum::one() + CycNum::zeta(3, 1);
        assert_eq!(x.abs2(), CycNum::one());
        let (re, im) = x.to_float(48);
        assert!(((re * re + im * im) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn float_examples() {
        assert!(close(&CycNum::zeta(4, 1), 0.0, 1.0));
        assert!(close(&(CycNum::zeta(3, 1) + CycNum::zeta(3, 2)), -1.0, 0.0));
        assert!(close(&CycNum::sqrt_p(3), 1.7320508075688772, 0.0));
    }

    #[test]
    fn mixed_orders_cancel() {
        // sum of all 12th roots of unity vanishes
        let s: CycNum = (0..12).map(|k| CycNum::zeta(12, k)).sum();
        assert!(s.is_zero());
        // zeta_15 = zeta_3^a zeta_5^b for suitable a, b
        let z = &CycNum::zeta(3, 2) * &CycNum::zeta(5, 1);
        assert_eq!(z, CycNum::zeta(15, 13));
    }

    #[test]
    fn inverse() {
        let x = CycNum::one() + CycNum::zeta(5, 1).scale(&rat(1, 3));
        let y = x.inv().unwrap();
        assert_eq!(&x * &y, CycNum::one());
        let s = CycNum::from_int(2) + CycNum::sqrt_p(5) * CycNum::zeta(3, 1);
        assert_eq!(&s * &s.inv().unwrap(), CycNum::one());
        assert!(CycNum::zero().inv().is_none());
    }
}
