//! Unramified Euler factors for `SL2` and `Mp2`, the factor `L_X^#` of the
//! hyperboloid, finite orthogonal group orders, and the assembly identity that
//! produces `L_X^#` from its local ingredients.

use alloc::format;
use alloc::string::String;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::exactnum::CycNum;
use crate::padic::{self, int, p_pow, Rational};
use crate::quadspace::QuadSpace;
use crate::schwartz::int_det;

const UNIT_TOL: f64 = 1e-12;
const FLOAT_TOL: f64 = 1e-12;

/// A Satake parameter on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub enum SatakeParam {
    /// `zeta_order^exp`, handled exactly.
    Root { order: u64, exp: i64 },
    Float(Complex64),
}

/// Satake parameter of a tempered unramified representation, with the
/// discriminant character value `chi_disc(p)` it is twisted by.
#[derive(Clone, Debug, PartialEq)]
pub struct SatakeData {
    pub alpha: SatakeParam,
    pub p: u64,
    /// `chi_disc(p)` in `{-1, 0, 1}`.
    pub twist: i32,
    /// Odd-dimensional (metaplectic) branch.
    pub odd: bool,
}

impl SatakeData {
    pub fn root(p: u64, order: u64, exp: i64, twist: i32, odd: bool) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidArgument("root of unity of order 0".into()));
        }
        Self::checked(SatakeParam::Root { order, exp }, p, twist, odd)
    }

    pub fn float(p: u64, alpha: Complex64, twist: i32, odd: bool) -> Result<Self> {
        if (alpha.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!("|alpha| = {} is not 1", alpha.norm())));
        }
        Self::checked(SatakeParam::Float(alpha), p, twist, odd)
    }

    /// Twist and parity read off `qs`.
    pub fn for_space(qs: &QuadSpace, alpha: SatakeParam) -> Result<Self> {
        let twist = qs.disc_char(&int(qs.p() as i64));
        Self::checked(alpha, qs.p(), twist, qs.n() % 2 == 1)
    }

    fn checked(alpha: SatakeParam, p: u64, twist: i32, odd: bool) -> Result<Self> {
        if !padic::is_odd_prime(p) {
            return Err(Error::EvenResidueChar(p));
        }
        if !(-1..=1).contains(&twist) {
            return Err(Error::InvalidArgument(format!("twist {twist} is not in {{-1, 0, 1}}")));
        }
        Ok(Self { alpha, p, twist, odd })
    }

    pub fn conj(&self) -> Self {
        let alpha = match &self.alpha {
            SatakeParam::Root { order, exp } => SatakeParam::Root { order: *order, exp: -exp },
            SatakeParam::Float(z) => SatakeParam::Float(z.conj()),
        };
        Self { alpha, ..self.clone() }
    }

    fn alpha_pow(&self, k: i64) -> Num {
        match &self.alpha {
            SatakeParam::Root { order, exp } => Num::E(CycNum::zeta(*order, exp * k)),
            SatakeParam::Float(z) => Num::F(z.powi(k as i32)),
        }
    }
}

/// How `L_psi` factors of `Mp2` read the Satake parameter.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MetaplecticConvention {
    /// `alpha` is the parameter of the Shimura lift: `L_psi(s, std)` has roots `alpha^{+-1}`.
    #[default]
    Degree2Shimura,
    /// The Shimura lift has parameter `alpha^2`.
    SquaredParameter,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LValue {
    Exact(CycNum),
    Float(f64),
}

impl LValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            LValue::Exact(x) => x.to_float(53).0,
            LValue::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&CycNum> {
        match self {
            LValue::Exact(x) => Some(x),
            LValue::Float(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LFactorValue {
    pub value: LValue,
    pub description: String,
}

impl LFactorValue {
    fn new(n: Num, description: String) -> Self {
        let value = match n {
            Num::E(x) => LValue::Exact(x),
            Num::F(z) => LValue::Float(z.re),
        };
        Self { value, description }
    }
}

/// Exact or floating scalar.
#[derive(Clone, Debug)]
enum Num {
    E(CycNum),
    F(Complex64),
}

impl Num {
    fn rat(r: Rational) -> Self {
        Num::E(CycNum::from_rational(r))
    }

    fn float(&self) -> Complex64 {
        match self {
            Num::E(x) => {
                let (re, im) = x.to_float(53);
                Complex64::new(re, im)
            }
            Num::F(z) => *z,
        }
    }

    fn mul(&self, o: &Num) -> Num {
        match (self, o) {
            (Num::E(a), Num::E(b)) => Num::E(a * b),
            _ => Num::F(self.float() * o.float()),
        }
    }

    fn one_minus(&self) -> Num {
        match self {
            Num::E(a) => Num::E(&CycNum::one() - a),
            Num::F(z) => Num::F(Complex64::new(1.0, 0.0) - z),
        }
    }

    fn inv(&self) -> Result<Num> {
        match self {
            Num::E(a) => a.inv().map(Num::E).ok_or(Error::PoleAtS),
            Num::F(z) if z.norm() < FLOAT_TOL => Err(Error::PoleAtS),
            Num::F(z) => Ok(Num::F(z.inv())),
        }
    }
}

/// `p^{-s}`: exact for `2s` integral, through the formal `sqrt(p)`.
fn p_minus_s(p: u64, s: &Rational) -> Num {
    let two_s = s * int(2);
    if two_s.is_integer() {
        let k = two_s.to_integer().to_i64().expect("exponent fits i64");
        if k.is_even() {
            return Num::rat(p_pow(p, -k / 2));
        }
        // p^{-k/2} = p^{-(k+1)/2} sqrt(p)
        return Num::E(CycNum::sqrt_p(p).scale(&p_pow(p, -(k + 1) / 2)));
    }
    let sf = s.numer().to_f64().unwrap() / s.denom().to_f64().unwrap();
    Num::F(Complex64::new(libm::pow(p as f64, -sf), 0.0))
}

/// `prod_i (1 - c_i p^{-s})^{-1}`.
fn euler(roots: &[Num], p: u64, s: &Rational) -> Result<Num> {
    let x = p_minus_s(p, s);
    let mut out = Num::rat(int(1));
    for c in roots {
        out = out.mul(&c.mul(&x).one_minus());
    }
    out.inv()
}

fn chi(twist: i32) -> Num {
    Num::rat(int(twist as i64))
}

fn ratio(num: &[&Num], den: &[&Num]) -> Result<Num> {
    let mut d = Num::rat(int(1));
    for x in den {
        d = d.mul(x);
    }
    let mut out = d.inv()?;
    for x in num {
        out = out.mul(x);
    }
    Ok(out)
}

fn zeta_num(p: u64, s: &Rational) -> Result<Num> {
    euler(&[Num::rat(int(1))], p, s)
}

fn abelian_num(p: u64, twist: i32, s: &Rational) -> Result<Num> {
    euler(&[chi(twist)], p, s)
}

fn std_num(sigma: &SatakeData, twist: i32, s: &Rational) -> Result<Num> {
    let c = chi(twist);
    let roots = [c.mul(&sigma.alpha_pow(2)), c.clone(), c.mul(&sigma.alpha_pow(-2))];
    euler(&roots, sigma.p, s)
}

fn mp_base(conv: MetaplecticConvention) -> i64 {
    match conv {
        MetaplecticConvention::Degree2Shimura => 1,
        MetaplecticConvention::SquaredParameter => 2,
    }
}

fn mp_std_num(sigma: &SatakeData, twist: i32, s: &Rational, conv: MetaplecticConvention) -> Result<Num> {
    let c = chi(twist);
    let k = mp_base(conv);
    let roots = [c.mul(&sigma.alpha_pow(k)), c.mul(&sigma.alpha_pow(-k))];
    euler(&roots, sigma.p, s)
}

fn mp_ad_num(sigma: &SatakeData, s: &Rational, conv: MetaplecticConvention) -> Result<Num> {
    let k = mp_base(conv);
    let roots = [sigma.alpha_pow(2 * k), Num::rat(int(1)), sigma.alpha_pow(-2 * k)];
    euler(&roots, sigma.p, s)
}

/// `zeta_F(s) = (1 - p^{-s})^{-1}`.
pub fn zeta_factor(p: u64, s: &Rational) -> Result<LFactorValue> {
    Ok(LFactorValue::new(zeta_num(p, s)?, format!("zeta_F({s})")))
}

/// `L(s, chi) = (1 - chi(p) p^{-s})^{-1}` for an unramified quadratic character.
pub fn abelian_lfactor(p: u64, twist: i32, s: &Rational) -> Result<LFactorValue> {
    Ok(LFactorValue::new(abelian_num(p, twist, s)?, format!("L({s}, chi)")))
}

/// `L(s, sigma x chi, std)` for `SL2`, whose dual group acts through `SO_3`; with
/// the trivial twist this is also the adjoint factor.
pub fn std_lfactor(sigma: &SatakeData, s: &Rational) -> Result<LFactorValue> {
    Ok(LFactorValue::new(std_num(sigma, sigma.twist, s)?, format!("L({s}, sigma x chi, std)")))
}

/// `L(s, sigma, Ad)`.
pub fn adjoint_lfactor(sigma: &SatakeData, s: &Rational) -> Result<LFactorValue> {
    Ok(LFactorValue::new(std_num(sigma, 1, s)?, format!("L({s}, sigma, Ad)")))
}

/// `L_psi(s, sigma x chi, std)` for `Mp2`.
pub fn mp_std_lfactor(sigma: &SatakeData, s: &Rational, conv: MetaplecticConvention) -> Result<LFactorValue> {
    Ok(LFactorValue::new(mp_std_num(sigma, sigma.twist, s, conv)?, format!("L_psi({s}, sigma x chi, std)")))
}

/// `L_psi(s, sigma, Ad)` for `Mp2`.
pub fn mp_adjoint_lfactor(sigma: &SatakeData, s: &Rational, conv: MetaplecticConvention) -> Result<LFactorValue> {
    Ok(LFactorValue::new(mp_ad_num(sigma, s, conv)?, format!("L_psi({s}, sigma, Ad)")))
}

fn half(n: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(2))
}

fn check_branch(qs: &QuadSpace, sigma: &SatakeData) -> Result<()> {
    if sigma.p != qs.p() || sigma.odd != (qs.n() % 2 == 1) {
        return Err(Error::InvalidArgument("Satake data does not match the quadratic space".into()));
    }
    Ok(())
}

/// `L_X^#(sigma)`.
///
/// Even `dim V = 2n`: `L(n-1, sigma x chi, std) / L(1, sigma, Ad) * L(n, chi) / zeta(2n-2)`.
/// Odd `dim V = 2n+1`: `L_psi(n-1/2, sigma x chi, std) L_psi(1/2, sigma, std) / L_psi(1, sigma, Ad) * zeta(2n) / L(n, chi)^2`.
pub fn lx_sharp(qs: &QuadSpace, sigma: &SatakeData, conv: MetaplecticConvention) -> Result<LFactorValue> {
    check_branch(qs, sigma)?;
    let p = sigma.p;
    let n = (qs.n() / 2) as i64;
    let chi = sigma.twist;
    let v = if qs.n() % 2 == 0 {
        let a = std_num(sigma, chi, &int(n - 1))?;
        let b = std_num(sigma, 1, &int(1))?;
        let c = abelian_num(p, chi, &int(n))?;
        let d = zeta_num(p, &int(2 * n - 2))?;
        ratio(&[&a, &c], &[&b, &d])?
    } else {
        let a = mp_std_num(sigma, chi, &half(2 * n - 1), conv)?;
        let b = mp_std_num(sigma, 1, &half(1), conv)?;
        let c = mp_ad_num(sigma, &int(1), conv)?;
        let d = zeta_num(p, &int(2 * n))?;
        let e = abelian_num(p, chi, &int(n))?;
        ratio(&[&a, &b, &d], &[&c, &e, &e])?
    };
    Ok(LFactorValue::new(v, format!("L_X^#, dim V = {}", qs.n())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrthKind {
    Odd,
    EvenPlus,
    EvenMinus,
}

/// `|O_{2m}^{+-}(F_q)| = 2 q^{m(m-1)} (q^m -+ 1) prod_{i<m} (q^{2i} - 1)` and
/// `|O_{2m+1}(F_q)| = 2 q^{m^2} prod_{i<=m} (q^{2i} - 1)`.
pub fn orth_group_order(kind: OrthKind, m: u32, q: u64) -> BigInt {
    let q = BigInt::from(q);
    let prod = |top: u32| -> BigInt { (1..=top).map(|i| q.pow(2 * i) - 1).product() };
    match kind {
        OrthKind::Odd => BigInt::from(2) * q.pow(m * m) * prod(m),
        OrthKind::EvenPlus | OrthKind::EvenMinus => {
            let eps = if kind == OrthKind::EvenPlus { 1 } else { -1 };
            BigInt::from(2) * q.pow(m * (m - 1)) * (q.pow(m) - eps) * prod(m - 1)
        }
    }
}

/// Type of an even-dimensional form with Gram determinant `det` (bilinear form `S`).
fn even_kind(dim: usize, det: &BigInt, p: u64) -> OrthKind {
    let m = (dim / 2) as u32;
    let sign = if m % 2 == 0 { BigInt::one() } else { -BigInt::one() };
    if padic::legendre(&(sign * det), p) == 1 {
        OrthKind::EvenPlus
    } else {
        OrthKind::EvenMinus
    }
}

fn kind_and_rank(dim: usize, det: &BigInt, p: u64) -> (OrthKind, u32) {
    if dim % 2 == 1 {
        (OrthKind::Odd, (dim / 2) as u32)
    } else {
        (even_kind(dim, det, p), (dim / 2) as u32)
    }
}

/// `p^{-dim X} #X(F_p)` by counting residues.
pub fn volume_from_points(qs: &QuadSpace) -> Rational {
    let count = qs.point_count_residue(&int(1));
    int(count as i64) * p_pow(qs.p(), -(qs.n() as i64 - 1))
}

/// `p^{-dim X} #O(V)(F_p) / #O(v1^perp)(F_p)`.
pub fn volume_from_groups(qs: &QuadSpace) -> Rational {
    let p = qs.p();
    let n = qs.n();
    let det = BigInt::from(int_det(qs.gram()));
    // S = (2) + S_U over Z_p, so det S_U = det S / 2 up to squares.
    let det_u = &det * BigInt::from(2);
    let (kv, mv) = kind_and_rank(n, &det, p);
    let (ku, mu) = kind_and_rank(n - 1, &det_u, p);
    let num = orth_group_order(kv, mv, p);
    let den = orth_group_order(ku, mu, p);
    Rational::new(num, den) * p_pow(p, -(n as i64 - 1))
}

/// Both sides of the identity `L_X^# = |l_sigma(v0)|^2 Z(Phi0, Phi0, v0, v0) Vol(X(O))^{-2}`
/// with `Vol(K) = zeta(2)^{-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assembly {
    pub lhs: LFactorValue,
    pub rhs: LFactorValue,
    pub volume: Rational,
    pub residual: f64,
    pub exact: bool,
    pub pass: bool,
}

/// Evaluates both sides; the volume comes from residue point counts.
pub fn assembly_check(qs: &QuadSpace, sigma: &SatakeData, conv: MetaplecticConvention) -> Result<Assembly> {
    let lhs = lx_sharp(qs, sigma, conv)?;
    let p = sigma.p;
    let n = (qs.n() / 2) as i64;
    let chi = sigma.twist;
    let volume = volume_from_points(qs);
    let zeta2 = zeta_num(p, &int(2))?;
    let (ell2, z) = if qs.n() % 2 == 0 {
        let ad = std_num(sigma, 1, &int(1))?;
        let ell2 = ratio(&[&zeta2], &[&ad])?;
        let st = std_num(sigma, chi, &int(n - 1))?;
        let z = ratio(&[&st], &[&zeta2, &zeta_num(p, &int(2 * n - 2))?, &abelian_num(p, chi, &int(n))?])?;
        (ell2, z)
    } else {
        let st = mp_std_num(sigma, 1, &half(1), conv)?;
        let ad = mp_ad_num(sigma, &int(1), conv)?;
        let ell2 = ratio(&[&zeta2, &st], &[&ad])?;
        let st2 = mp_std_num(sigma, chi, &half(2 * n - 1), conv)?;
        let z = ratio(&[&st2], &[&zeta2, &zeta_num(p, &int(2 * n))?])?;
        (ell2, z)
    };
    let vol = Num::rat(volume.clone());
    let rhs_num = ratio(&[&ell2, &z], &[&vol, &vol])?;
    let rhs = LFactorValue::new(rhs_num, "|l_sigma(v0)|^2 Z Vol^{-2}".into());
    let (exact, residual, pass) = match (&lhs.value, &rhs.value) {
        (LValue::Exact(a), LValue::Exact(b)) => {
            let d = a - b;
            (true, d.to_float(53).0.abs().max(d.to_float(53).1.abs()), d.is_zero())
        }
        (a, b) => {
            let r = (a.to_f64() - b.to_f64()).abs();
            (false, r, r < FLOAT_TOL)
        }
    };
    Ok(Assembly { lhs, rhs, volume, residual, exact, pass })
}

/// Twist of the Satake data for `qs`, as an integer in `{-1, 0, 1}`.
pub fn disc_twist(qs: &QuadSpace) -> i32 {
    qs.disc_char(&int(qs.p() as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::rat;
    use alloc::vec;

    fn exact(v: &LFactorValue) -> Rational {
        v.value.as_exact().unwrap().as_rational().unwrap()
    }

    fn split4(p: u64) -> QuadSpace {
        let g = vec![vec![0, 1, 0, 0], vec![1, 0, 0, 0], vec![0, 0, 0, 1], vec![0, 0, 1, 0]];
        QuadSpace::new(g, vec![1, 1, 0, 0], p).unwrap()
    }

    fn ternary(p: u64) -> QuadSpace {
        let g = vec![vec![2, 0, 0], vec![0, 0, 1], vec![0, 1, 0]];
        QuadSpace::new(g, vec![1, 0, 0], p).unwrap()
    }

    #[test]
    fn zeta_examples() {
        assert_eq!(exact(&zeta_factor(3, &int(2)).unwrap()), rat(9, 8));
        assert_eq!(exact(&zeta_factor(3, &int(1)).unwrap()), rat(3, 2));
        assert_eq!(zeta_factor(3, &int(0)).unwrap_err(), Error::PoleAtS);
    }

    #[test]
    fn std_examples() {
        let s = SatakeData::root(3, 1, 0, 1, false).unwrap();
        assert_eq!(exact(&std_lfactor(&s, &int(1)).unwrap()), rat(27, 8));
        let i = SatakeData::root(3, 4, 1, 1, false).unwrap();
        assert_eq!(exact(&std_lfactor(&i, &int(1)).unwrap()), rat(27, 32));
        let z = SatakeData::root(3, 7, 2, -1, false).unwrap();
        assert_eq!(std_lfactor(&z, &int(1)).unwrap().value, std_lfactor(&z.conj(), &int(1)).unwrap().value);
    }

    #[test]
    fn dim4_split_is_one() {
        let qs = split4(3);
        for order in 1..=20u64 {
            let s = SatakeData::for_space(&qs, SatakeParam::Root { order, exp: 1 }).unwrap();
            let v = lx_sharp(&qs, &s, MetaplecticConvention::default()).unwrap();
            assert!(v.value.as_exact().unwrap().is_one(), "order {order}");
        }
    }

    #[test]
    fn ternary_example_matches_display() {
        let qs = ternary(3);
        assert_eq!(disc_twist(&qs), 1);
        let s = SatakeData::for_space(&qs, SatakeParam::Root { order: 8, exp: 1 }).unwrap();
        let conv = MetaplecticConvention::default();
        let v = lx_sharp(&qs, &s, conv).unwrap();
        let st = mp_std_lfactor(&s, &half(1), conv).unwrap().value.as_exact().unwrap().clone();
        let ad = mp_adjoint_lfactor(&s, &int(1), conv).unwrap().value.as_exact().unwrap().clone();
        let z2 = CycNum::from_rational(rat(9, 8));
        let z1 = CycNum::from_rational(rat(3, 2));
        let expected = &(&(&st * &st) * &ad.inv().unwrap()) * &(&z2 * &(&z1 * &z1).inv().unwrap());
        assert_eq!(v.value.as_exact().unwrap(), &expected);
    }

    #[test]
    fn group_orders() {
        assert_eq!(orth_group_order(OrthKind::EvenPlus, 2, 3), BigInt::from(1152));
        assert_eq!(orth_group_order(OrthKind::Odd, 1, 3), BigInt::from(48));
        assert_eq!(volume_from_groups(&split4(3)), rat(8, 9));
        assert_eq!(volume_from_points(&split4(3)), rat(8, 9));
    }

    #[test]
    fn assembly_basic() {
        let conv = MetaplecticConvention::default();
        let qs = split4(3);
        let s = SatakeData::for_space(&qs, SatakeParam::Root { order: 5, exp: 2 }).unwrap();
        let a = assembly_check(&qs, &s, conv).unwrap();
        assert!(a.pass && a.exact);
        let qs = ternary(3);
        let s = SatakeData::for_space(&qs, SatakeParam::Root { order: 8, exp: 1 }).unwrap();
        assert!(assembly_check(&qs, &s, conv).unwrap().pass);
        let f = SatakeData::for_space(&qs, SatakeParam::Float(Complex64::from_polar(1.0, 0.7))).unwrap();
        let a = assembly_check(&qs, &f, conv).unwrap();
        assert!(a.pass && !a.exact);
    }
}
