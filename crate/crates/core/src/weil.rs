//! The Weil representation of `SL2(Q_p)` on Schwartz-Bruhat functions of a
//! quadratic space.
//!
//! ```text
//! n(b) Phi(v) = psi(b q(v)) Phi(v)
//! t(a) Phi(v) = |a|^{n/2} chi_disc(a) Phi(a v)
//! w    Phi    = gamma F(Phi)
//! ```
//!
//! with `w = [[0, 1], [-1, 0]]`. General elements act through their Bruhat
//! factorization. For odd `n` these formulas only define a projective action
//! (the metaplectic cocycle is not tracked).

use alloc::vec::Vec;
use core::fmt;


use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exactnum::CycNum;
use crate::padic::{self, int, p_pow, Rational};
use crate::quadspace::QuadSpace;
use crate::schwartz::SchwartzFn;

/// An element of `SL2(Q)` regarded in `SL2(Q_p)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SL2Elt {
    a: Rational,
    b: Rational,
    c: Rational,
    d: Rational,
}

/// Bruhat factorization.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Bruhat {
    /// `t(alpha) n(beta)`.
    Upper { alpha: Rational, beta: Rational },
    /// `n(beta1) w t(alpha) n(beta2)`.
    Big { beta1: Rational, alpha: Rational, beta2: Rational },
}

impl SL2Elt {
    pub fn new(a: Rational, b: Rational, c: Rational, d: Rational) -> Result<Self> {
        if &a * &d - &b * &c != Rational::one() {
            return Err(Error::InvalidArgument("determinant is not 1".into()));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn identity() -> Self {
        Self::n(&Rational::zero())
    }

    pub fn n(b: &Rational) -> Self {
        Self { a: int(1), b: b.clone(), c: int(0), d: int(1) }
    }

    /// `diag(a, a^{-1})`.
    pub fn t(a: &Rational) -> Self {
        assert!(!a.is_zero(), "t(0)");
        Self { a: a.clone(), b: int(0), c: int(0), d: a.recip() }
    }

    pub fn w() -> Self {
        Self { a: int(0), b: int(1), c: int(-1), d: int(0) }
    }

    pub fn entries(&self) -> [&Rational; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn mul(&self, o: &SL2Elt) -> SL2Elt {
        Self {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn inverse(&self) -> SL2Elt {
        Self { a: self.d.clone(), b: -&self.b, c: -&self.c, d: self.a.clone() }
    }

    /// Whether every entry lies in `Z_p`.
    pub fn is_integral(&self, p: u64) -> bool {
        self.entries().iter().all(|x| padic::valuation(x, p).map_or(true, |v| v >= 0))
    }

    pub fn bruhat(&self) -> Bruhat {
        if self.c.is_zero() {
            Bruhat::Upper { alpha: self.a.clone(), beta: &self.b / &self.a }
        } else {
            Bruhat::Big { beta1: &self.a / &self.c, alpha: -&self.c, beta2: &self.d / &self.c }
        }
    }
}

impl fmt::Debug for SL2Elt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

pub fn bruhat_factor(g: &SL2Elt) -> Bruhat {
    g.bruhat()
}

/// Multiplies the factors back together.
pub fn recompose(f: &Bruhat) -> SL2Elt {
    match f {
        Bruhat::Upper { alpha, beta } => SL2Elt::t(alpha).mul(&SL2Elt::n(beta)),
        Bruhat::Big { beta1, alpha, beta2 } => SL2Elt::n(beta1)
            .mul(&SL2Elt::w())
            .mul(&SL2Elt::t(alpha))
            .mul(&SL2Elt::n(beta2)),
    }
}

/// `|a|^{n/2}` with the formal `sqrt(p)` for odd `n v(a)`.
pub fn abs_half_power(a: &Rational, n: usize, p: u64) -> CycNum {
    let v = padic::valuation(a, p).expect("nonzero");
    let e = v * n as i64;
    if e.is_even() {
        CycNum::from_rational(p_pow(p, -e / 2))
    } else {
        // p^{-e/2} = p^{-(e+1)/2} sqrt(p)
        &CycNum::from_rational(p_pow(p, -(e + 1) / 2)) * &CycNum::sqrt_p(p)
    }
}

/// `int_{p^{-k} Z_p} psi(u x^2) dx` for a unit `u`, as a sum over `p^{-k} Z_p / p^k Z_p`.
fn gauss_1d(u: &Rational, k: u32, p: u64) -> CycNum {
    let modulus = p.pow(2 * k) as i128;
    let ur = padic::to_residue(u, p, 0, modulus).expect("unit");
    let mut counts = alloc::vec![0u64; modulus as usize];
    for y in 0..modulus {
        counts[((ur * y % modulus) * y % modulus) as usize] += 1;
    }
    let weight = p_pow(p, -(k as i64));
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(e, &c)| CycNum::zeta(modulus as u64, e as i64).scale(&(&weight * int(c as i64))))
        .sum()
}

/// `sqrt` of `x = p^j` as `p^{j/2}` with the formal `sqrt(p)` when `j` is odd.
fn sqrt_p_power(x: &Rational, p: u64) -> Option<CycNum> {
    let v = padic::valuation(x, p)?;
    if *x != p_pow(p, v) {
        return None;
    }
    Some(if v.is_even() {
        CycNum::from_rational(p_pow(p, v / 2))
    } else {
        &CycNum::from_rational(p_pow(p, (v - 1) / 2)) * &CycNum::sqrt_p(p)
    })
}

/// The Weil index `gamma_{psi, q}` as the normalized limit of
/// `g_k = int_{p^{-k} L} psi(q(x)) dx`, computed on an orthogonal `Z_p`-basis.
pub fn weil_index(qs: &QuadSpace) -> Result<CycNum> {
    let p = qs.p();
    let units = qs.diagonal_units();
    let g = |k: u32| -> CycNum { units.iter().map(|u| gauss_1d(u, k, p)).fold(CycNum::one(), |acc, x| &acc * &x) };
    let mut prev = g(1);
    let mut k = 2;
    loop {
        let cur = g(k);
        if cur == prev {
            break;
        }
        if k >= 3 {
            return Err(Error::NonStabilizing(k as i64));
        }
        prev = cur;
        k += 1;
    }
    let norm = prev.abs2().as_rational().ok_or_else(|| Error::NormalizationFailure("|g_k|^2 is not rational".into()))?;
    let root = sqrt_p_power(&norm, p).ok_or_else(|| Error::NormalizationFailure(alloc::format!("|g_k|^2 = {norm}")))?;
    let gamma = &prev * &root.inv().unwrap();
    let chi = qs.disc_char(&int(-1));
    if gamma.pow(2).unwrap() != CycNum::from_int(chi as i64) && qs.n() % 2 == 0 {
        return Err(Error::NormalizationFailure("gamma^2 != chi_disc(-1)".into()));
    }
    Ok(gamma)
}

fn check(phi: &SchwartzFn, qs: &QuadSpace) -> Result<()> {
    if phi.dim() != qs.n() {
        return Err(Error::DimensionMismatch { expected: qs.n(), got: phi.dim() });
    }
    Ok(())
}

pub fn act_unipotent(phi: &SchwartzFn, b: &Rational, qs: &QuadSpace) -> Result<SchwartzFn> {
    check(phi, qs)?;
    phi.phase_mul_quadratic(b, qs.gram())
}

pub fn act_torus(phi: &SchwartzFn, a: &Rational, qs: &QuadSpace) -> Result<SchwartzFn> {
    check(phi, qs)?;
    if a.is_zero() {
        return Err(Error::InvalidArgument("t(0)".into()));
    }
    let factor = abs_half_power(a, qs.n(), qs.p()).scale(&int(qs.disc_char(a) as i64));
    Ok(phi.dilate(a).scale(&factor))
}

pub fn act_weyl(phi: &SchwartzFn, qs: &QuadSpace) -> Result<SchwartzFn> {
    act_weyl_with(phi, qs, &weil_index(qs)?)
}

pub(crate) fn act_weyl_with(phi: &SchwartzFn, qs: &QuadSpace, gamma: &CycNum) -> Result<SchwartzFn> {
    check(phi, qs)?;
    Ok(phi.fourier(qs.gram())?.scale(gamma))
}

/// One factor of a word in `n(b)`, `t(a)`, `w`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Factor {
    N(Rational),
    T(Rational),
    W,
}

/// A word for `g`, leftmost factor first: `g = b k` with `b` upper triangular
/// and `k` in `SL2(Z_p)`, and `k` written with p-integral factors only.
pub fn factor_word(g: &SL2Elt, p: u64) -> Vec<Factor> {
    let [a, b, c, d] = g.entries();
    let e = [c, d].iter().filter_map(|x| padic::valuation(x, p)).min().unwrap();
    let delta = p_pow(p, e);
    let (k21, k22) = (c / &delta, d / &delta);
    let k = if padic::valuation(&k22, p) == Some(0) {
        SL2Elt { a: k22.recip(), b: int(0), c: k21.clone(), d: k22.clone() }
    } else {
        SL2Elt { a: int(0), b: -k21.recip(), c: k21.clone(), d: k22.clone() }
    };
    let ki = k.inverse();
    let alpha = a * &ki.a + b * &ki.c;
    let beta = a * &ki.b + b * &ki.d;
    let mut word = alloc::vec![Factor::T(alpha.clone()), Factor::N(&beta / &alpha)];
    let [ka, kb, kc, kd] = k.entries();
    if kc.is_zero() {
        word.extend([Factor::T(ka.clone()), Factor::N(kb / ka)]);
    } else if padic::valuation(kc, p) == Some(0) {
        word.extend([Factor::N(ka / kc), Factor::W, Factor::T(-kc), Factor::N(kd / kc)]);
    } else {
        // n^-(x) = t(-1) w n(-x) w
        let x = kc / ka;
        word.extend([Factor::T(int(-1)), Factor::W, Factor::N(-x), Factor::W, Factor::T(ka.clone()), Factor::N(kb / ka)]);
    }
    word.retain(|f| !matches!(f, Factor::N(b) if b.is_zero()) && !matches!(f, Factor::T(a) if a.is_one()));
    word
}

pub fn word_product(word: &[Factor]) -> SL2Elt {
    word.iter().fold(SL2Elt::identity(), |acc, f| {
        acc.mul(&match f {
            Factor::N(b) => SL2Elt::n(b),
            Factor::T(a) => SL2Elt::t(a),
            Factor::W => SL2Elt::w(),
        })
    })
}

fn apply_word(phi: &SchwartzFn, word: &[Factor], qs: &QuadSpace, gamma: &CycNum) -> Result<SchwartzFn> {
    let mut x = phi.clone();
    for f in word.iter().rev() {
        x = match f {
            Factor::N(b) => act_unipotent(&x, b, qs)?,
            Factor::T(a) => act_torus(&x, a, qs)?,
            Factor::W => act_weyl_with(&x, qs, gamma)?,
        };
    }
    Ok(x)
}

/// `(word Phi)(v)`, with the leftmost Fourier transform evaluated at a single point.
fn apply_word_at(phi: &SchwartzFn, word: &[Factor], qs: &QuadSpace, gamma: &CycNum, v: &[Rational]) -> Result<CycNum> {
    let p = qs.p();
    let mut mult = CycNum::one();
    let mut v = v.to_vec();
    for (i, f) in word.iter().enumerate() {
        match f {
            Factor::N(b) => mult = &mult * &padic::psi_char(&(b * qs.q(&v)), p),
            Factor::T(a) => {
                mult = &mult * &abs_half_power(a, qs.n(), p).scale(&int(qs.disc_char(a) as i64));
                v.iter_mut().for_each(|x| *x *= a);
            }
            Factor::W => {
                let rest = apply_word(phi, &word[i + 1..], qs, gamma)?;
                return Ok(&(&mult * gamma) * &rest.fourier_at(qs.gram(), &v)?);
            }
        }
    }
    Ok(&mult * &phi.evaluate(&v)?)
}

fn gate(qs: &QuadSpace, acknowledge_metaplectic: bool) -> Result<()> {
    if qs.n() % 2 == 1 && !acknowledge_metaplectic {
        return Err(Error::MetaplecticAmbiguity);
    }
    Ok(())
}

/// `g Phi`, through [`factor_word`]. Odd `n` requires `acknowledge_metaplectic`,
/// in which case the composite of the factor operators is returned.
pub fn act_element(phi: &SchwartzFn, g: &SL2Elt, qs: &QuadSpace, acknowledge_metaplectic: bool) -> Result<SchwartzFn> {
    gate(qs, acknowledge_metaplectic)?;
    let word = factor_word(g, qs.p());
    let gamma = if word.contains(&Factor::W) { weil_index(qs)? } else { CycNum::one() };
    apply_word(phi, &word, qs, &gamma)
}

/// `(g Phi)(v)`.
pub fn act_element_at(
    phi: &SchwartzFn,
    g: &SL2Elt,
    qs: &QuadSpace,
    v: &[Rational],
    acknowledge_metaplectic: bool,
) -> Result<CycNum> {
    gate(qs, acknowledge_metaplectic)?;
    let word = factor_word(g, qs.p());
    let gamma = if word.contains(&Factor::W) { weil_index(qs)? } else { CycNum::one() };
    apply_word_at(phi, &word, qs, &gamma, v)
}

/// `(word Phi)(v)` for a word applied verbatim.
pub fn act_word_at(phi: &SchwartzFn, word: &[Factor], qs: &QuadSpace, v: &[Rational]) -> Result<CycNum> {
    let gamma = if word.contains(&Factor::W) { weil_index(qs)? } else { CycNum::one() };
    apply_word_at(phi, word, qs, &gamma, v)
}

/// Applies a word verbatim (no refactoring).
pub fn act_word(phi: &SchwartzFn, word: &[Factor], qs: &QuadSpace) -> Result<SchwartzFn> {
    let gamma = if word.contains(&Factor::W) { weil_index(qs)? } else { CycNum::one() };
    apply_word(phi, word, qs, &gamma)
}
