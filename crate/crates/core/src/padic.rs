//! p-adic bookkeeping on global rationals: valuations, absolute values,
//! fractional parts, the standard additive character and Hilbert symbols.
//!
//! `F = Q_p` with `p` odd. Scalars are exact rationals regarded p-adically;
//! every function in scope is locally constant, so rational test points are
//! enough and nothing is ever truncated.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::exactnum::CycNum;

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// `v_p(x)` for a nonzero integer, `None` for zero.
pub fn int_valuation(x: &BigInt, p: u64) -> Option<i64> {
    if x.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut v = 0;
    let mut cur = x.clone();
    loop {
        let (q, r) = cur.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        cur = q;
        v += 1;
    }
}

/// `v_p(x)`, `None` standing for `+inf` at zero.
pub fn valuation(x: &Rational, p: u64) -> Option<i64> {
    let vn = int_valuation(x.numer(), p)?;
    let vd = int_valuation(x.denom(), p).unwrap_or(0);
    Some(vn - vd)
}

/// `p^e` as an exact rational; `e` may be negative.
pub fn p_pow(p: u64, e: i64) -> Rational {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Rational::from_integer(base)
    } else {
        Rational::new(BigInt::one(), base)
    }
}

pub fn big_p_pow(p: u64, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

/// `|x|_p`; zero maps to zero.
pub fn abs_p(x: &Rational, p: u64) -> Rational {
    match valuation(x, p) {
        None => Rational::zero(),
        Some(v) => p_pow(p, -v),
    }
}

/// Splits `x = p^v * u` with `u` a p-adic unit. Panics on zero.
pub fn split_unit(x: &Rational, p: u64) -> (i64, Rational) {
    let v = valuation(x, p).expect("split_unit of zero");
    (v, x * p_pow(p, -v))
}

/// Inverse of `a` modulo `m` (`gcd(a, m) = 1`).
pub fn mod_inverse(a: &BigInt, m: &BigInt) -> BigInt {
    let e = a.mod_floor(m).extended_gcd(m);
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(m)
}

/// Reduces a p-integral rational modulo `p^k` (`k >= 0`) to an integer in `[0, p^k)`.
pub fn reduce_integral(x: &Rational, p: u64, k: u32) -> BigInt {
    let m = big_p_pow(p, k);
    if k == 0 {
        return BigInt::zero();
    }
    let inv = mod_inverse(x.denom(), &m);
    (x.numer() * inv).mod_floor(&m)
}

/// Canonical representative of `x` modulo `p^k Z_p`: returns `(a, s)` with
/// `x == a / p^s (mod p^k Z_p)`, `0 <= a < p^(s+k)` and `s` minimal
/// (so `p` does not divide `a` unless `s == 0`).
pub fn reduce_mod_ppow(x: &Rational, p: u64, k: i64) -> (BigInt, u32) {
    let s = match valuation(x, p) {
        Some(v) if v < 0 => (-v) as u32,
        _ => 0,
    };
    if s as i64 + k <= 0 {
        return (BigInt::zero(), 0);
    }
    let scaled = x * p_pow(p, s as i64);
    let mut a = reduce_integral(&scaled, p, (s as i64 + k) as u32);
    let mut s = s;
    let pb = BigInt::from(p);
    while s > 0 && (&a % &pb).is_zero() {
        a /= &pb;
        s -= 1;
    }
    (a, s)
}

/// The p-adic fractional part `{x}_p = a / p^k` with `0 <= a < p^k`.
pub fn frac_part(x: &Rational, p: u64) -> (BigInt, u32) {
    reduce_mod_ppow(x, p, 0)
}

/// `(valuation, |x|_p, {x}_p)`.
pub fn padic_profile(x: &Rational, p: u64) -> (Option<i64>, Rational, Rational) {
    let (a, k) = frac_part(x, p);
    let frac = Rational::new(a, big_p_pow(p, k));
    (valuation(x, p), abs_p(x, p), frac)
}

/// The standard additive character of conductor `Z_p`: `psi(x) = exp(2 pi i {x}_p)`.
pub fn psi_char(x: &Rational, p: u64) -> CycNum {
    let (a, k) = frac_part(x, p);
    if k == 0 {
        return CycNum::one();
    }
    let order = p.pow(k);
    let exp = a.to_u64().expect("fractional numerator fits u64");
    CycNum::zeta(order, exp as i64)
}

/// Legendre symbol `(a / p)` for an integer `a`; zero when `p | a`.
pub fn legendre(a: &BigInt, p: u64) -> i32 {
    let pb = BigInt::from(p);
    let r = a.mod_floor(&pb);
    if r.is_zero() {
        return 0;
    }
    let e = BigInt::from((p - 1) / 2);
    let t = r.modpow(&e, &pb);
    if t.is_one() {
        1
    } else {
        -1
    }
}

/// Legendre symbol of a p-adic unit given as a rational.
pub fn legendre_unit(u: &Rational, p: u64) -> i32 {
    let r = reduce_integral(u, p, 1);
    legendre(&r, p)
}

/// Hilbert symbol `(a, b)_p` for odd `p`.
pub fn hilbert_symbol(a: &Rational, b: &Rational, p: u64) -> i32 {
    assert!(!a.is_zero() && !b.is_zero(), "Hilbert symbol of zero");
    let (alpha, u) = split_unit(a, p);
    let (beta, v) = split_unit(b, p);
    let mut s = 1;
    if (alpha * beta).rem_euclid(2) == 1 && ((p - 1) / 2) % 2 == 1 {
        s = -s;
    }
    if beta.rem_euclid(2) == 1 {
        s *= legendre_unit(&u, p);
    }
    if alpha.rem_euclid(2) == 1 {
        s *= legendre_unit(&v, p);
    }
    s
}

/// Volume `p^{-kn}` of `c + p^k Z_p^n` under the self-dual measure.
pub fn ball_volume(k: i64, n: usize, p: u64) -> Rational {
    p_pow(p, -k * n as i64)
}

/// Least quadratic non-residue modulo `p`.
pub fn nonresidue(p: u64) -> u64 {
    (2..p)
        .find(|&a| legendre(&BigInt::from(a), p) == -1)
        .expect("odd prime has a non-residue")
}

pub fn sign_of(x: &Rational) -> Sign {
    if x.is_zero() {
        Sign::NoSign
    } else if x.is_positive() {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// A rational together with its cached p-adic valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicScalar {
    value: Rational,
    p: u64,
    valuation: Option<i64>,
}

impl PadicScalar {
    pub fn new(value: Rational, p: u64) -> Self {
        let valuation = valuation(&value, p);
        Self { value, p, valuation }
    }

    pub fn value(&self) -> &Rational {
        &self.value
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    /// `None` for zero.
    pub fn valuation(&self) -> Option<i64> {
        self.valuation
    }

    pub fn abs(&self) -> Rational {
        match self.valuation {
            None => Rational::zero(),
            Some(v) => p_pow(self.p, -v),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.valuation == Some(0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.p, other.p);
        Self {
            value: &self.value * &other.value,
            p: self.p,
            valuation: match (self.valuation, other.valuation) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Machine-integer helpers used by the enumeration hot paths.

pub(crate) fn ipow(p: u64, e: u32) -> i128 {
    (p as i128).pow(e)
}

/// `v_p` of a nonzero machine integer.
pub(crate) fn ival(mut x: i128, p: u64) -> Option<i64> {
    if x == 0 {
        return None;
    }
    let p = p as i128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    Some(v)
}

pub(crate) fn imod_inverse(a: i128, m: i128) -> i128 {
    let (mut old_r, mut r) = (a.rem_euclid(m), m);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "not invertible");
    old_s.rem_euclid(m)
}

/// Residue of `p^shift * x` modulo `modulus = p^K`; `None` if that product is not p-integral.
pub(crate) fn to_residue(x: &Rational, p: u64, shift: i64, modulus: i128) -> Option<i128> {
    if x.is_zero() {
        return Some(0);
    }
    let v = valuation(x, p).unwrap();
    if v + shift < 0 {
        return None;
    }
    let scaled = x * p_pow(p, shift);
    let m = BigInt::from(modulus);
    let inv = mod_inverse(scaled.denom(), &m);
    let r = (scaled.numer() * inv).mod_floor(&m);
    Some(r.to_i128().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_examples() {
        assert_eq!(padic_profile(&int(12), 3), (Some(1), rat(1, 3), int(0)));
        assert_eq!(padic_profile(&rat(5, 9), 3), (Some(-2), int(9), rat(5, 9)));
        assert_eq!(padic_profile(&rat(7, 4), 3), (Some(0), int(1), int(0)));
        assert_eq!(padic_profile(&int(0), 3).0, None);
    }

    #[test]
    fn frac_part_handles_prime_to_p_denominators() {
        // 1/6 = (1/2)/3 and 1/2 == 2 mod 3, so {1/6}_3 = 2/3.
        assert_eq!(padic_profile(&rat(1, 6), 3).2, rat(2, 3));
        assert_eq!(padic_profile(&rat(-1, 3), 3).2, rat(2, 3));
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_char(&rat(1, 3), 3), CycNum::zeta(3, 1));
        assert_eq!(psi_char(&rat(2, 9), 3), CycNum::zeta(9, 2));
        assert_eq!(psi_char(&int(5), 3), CycNum::one());
    }

    /// Solvability of `z^2 = a x^2 + b y^2` with a primitive solution modulo `p^k`,
    /// searched over a window large enough to detect a nontrivial p-adic zero.
    fn solvable_oracle(a: i64, b: i64, p: i64, k: u32) -> bool {
        let m = p.pow(k);
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    if x % p == 0 && y % p == 0 && z % p == 0 {
                        continue;
                    }
                    if (z * z - a * x * x - b * y * y).rem_euclid(m) == 0 {
                        return true;
                    }
                }
            }
        }
        false
    }

    #[test]
    fn hilbert_examples_against_solvability() {
        assert_eq!(hilbert_symbol(&int(1), &int(7), 3), 1);
        assert_eq!(hilbert_symbol(&int(3), &int(3), 3), -1);
        assert_eq!(hilbert_symbol(&int(2), &int(3), 3), -1);
        // Primitive solutions mod 3^3 exist iff the symbol is +1 (the forms here
        // have valuations <= 1, so level 3 already decides).
        for (a, b) in [(3, 3), (2, 3), (1, 3), (2, 2), (6, 3), (5, 3)] {
            let sym = hilbert_symbol(&int(a), &int(b), 3);
            assert_eq!(sym == 1, solvable_oracle(a, b, 3, 3), "({a},{b})");
        }
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_volume(0, 4, 3), int(1));
        assert_eq!(ball_volume(1, 1, 3), rat(1, 3));
        assert_eq!(ball_volume(-2, 2, 5), int(625));
    }

    #[test]
    fn reduce_is_canonical() {
        assert_eq!(reduce_mod_ppow(&rat(10, 9), 3, 1), (BigInt::from(10), 2));
        assert_eq!(reduce_mod_ppow(&rat(28, 9), 3, 1), (BigInt::from(1), 2));
        assert_eq!(reduce_mod_ppow(&rat(1, 3), 3, -1), (BigInt::zero(), 0));
        assert_eq!(reduce_mod_ppow(&rat(3, 9), 3, 1), (BigInt::from(1), 1));
    }

    #[test]
    fn small_helpers() {
        assert!(is_odd_prime(7) && !is_odd_prime(9) && !is_odd_prime(2));
        assert_eq!(nonresidue(7), 3);
        assert_eq!(imod_inverse(2, 27), 14);
        assert_eq!(to_residue(&rat(1, 2), 3, 0, 27), Some(14));
        assert_eq!(to_residue(&rat(1, 3), 3, 0, 27), None);
        assert_eq!(to_residue(&rat(1, 3), 3, 1, 27), Some(1));
    }
}
