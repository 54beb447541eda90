//! The maps `p: S(V) -> S(N, psi \ SL2)` and `q: S(V) -> S(X_1)`, their
//! orbital integrals, and the Hecke translate on the `SL2` side.
//!
//! The Whittaker-side function `f = p(Phi)` has non-compact support and is
//! never materialized; it is evaluated pointwise through [`p_value`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exactnum::CycNum;
use crate::padic::{self, int, p_pow, Rational};
use crate::quadspace::{DensityResult, FiberVerdict, QuadSpace};
use crate::schwartz::{Cell, SchwartzFn};
use crate::weil::{self, Factor, SL2Elt};

/// A test function on `X_1`, carried by an ambient function on `V`.
#[derive(Clone, Debug)]
pub struct XTestFn {
    ambient: SchwartzFn,
    meets: BTreeMap<Cell, bool>,
    qs: QuadSpace,
}

impl XTestFn {
    pub fn ambient(&self) -> &SchwartzFn {
        &self.ambient
    }

    /// Certified `meets X_1` verdict for each cell of the ambient function.
    pub fn meets_data(&self) -> &BTreeMap<Cell, bool> {
        &self.meets
    }

    /// The ambient function with every cell missing `X_1` dropped.
    pub fn on_x(&self) -> SchwartzFn {
        let terms = self
            .ambient
            .cells()
            .filter(|(c, _)| self.meets[*c])
            .map(|(c, v)| (c.clone(), v.clone()));
        SchwartzFn::from_terms(self.qs.n(), self.qs.p(), terms)
    }

    pub fn is_zero(&self) -> bool {
        self.meets.values().all(|m| !m)
    }

    /// Equality as functions on `X_1`.
    pub fn equals(&self, other: &XTestFn) -> Result<bool> {
        if self.qs.p() != other.qs.p() || self.qs.gram() != other.qs.gram() || self.qs.v1() != other.qs.v1() {
            return Ok(false);
        }
        Ok(restrict_x(&self.ambient.sub(&other.ambient)?, &self.qs)?.is_zero())
    }
}

/// `f = p(Phi)`, evaluated on demand.
#[derive(Clone, Debug)]
pub struct WhittakerTestFn {
    ambient: SchwartzFn,
}

impl WhittakerTestFn {
    pub fn new(ambient: SchwartzFn) -> Self {
        Self { ambient }
    }

    pub fn ambient(&self) -> &SchwartzFn {
        &self.ambient
    }

    pub fn value(&self, g: &SL2Elt, qs: &QuadSpace) -> Result<CycNum> {
        p_value(&self.ambient, g, qs)
    }

    pub fn orbital(&self, a: &Rational, qs: &QuadSpace) -> Result<DensityResult> {
        whittaker_orbital(&self.ambient, a, qs)
    }
}

/// The basic function `1_L`.
pub fn basic_phi(qs: &QuadSpace) -> SchwartzFn {
    SchwartzFn::indicator(Cell::lattice(qs.n(), 0), qs.p())
}

/// `p(Phi)(g) = (g Phi)(v1)`. Odd `n` needs [`p_value_factored`].
pub fn p_value(phi: &SchwartzFn, g: &SL2Elt, qs: &QuadSpace) -> Result<CycNum> {
    weil::act_element_at(phi, g, qs, &qs.v1_rational(), false)
}

/// `p(Phi)(w^eps t(a) n(b))`, valid for every `n`.
pub fn p_value_factored(phi: &SchwartzFn, eps: bool, a: &Rational, b: &Rational, qs: &QuadSpace) -> Result<CycNum> {
    let mut word = Vec::new();
    if eps {
        word.push(Factor::W);
    }
    word.push(Factor::T(a.clone()));
    word.push(Factor::N(b.clone()));
    weil::act_word_at(phi, &word, qs, &qs.v1_rational())
}

/// `f_0(g) = p(1_L)(g)`.
pub fn basic_f_value(qs: &QuadSpace, g: &SL2Elt) -> Result<CycNum> {
    p_value(&basic_phi(qs), g, qs)
}

/// `q(Phi)`: the restriction of `Phi` to `X_1`.
pub fn restrict_x(phi: &SchwartzFn, qs: &QuadSpace) -> Result<XTestFn> {
    let one = int(1);
    let mut meets = BTreeMap::new();
    for (cell, _) in phi.cells() {
        let m = match qs.meets_fiber(cell, &one) {
            FiberVerdict::Yes => true,
            FiberVerdict::No => false,
            FiberVerdict::Undetermined(l) => return Err(Error::NeedsRefinement(l)),
        };
        meets.insert(cell.clone(), m);
    }
    Ok(XTestFn { ambient: phi.clone(), meets, qs: qs.clone() })
}

/// `gamma chi(a) |a|^{-n/2}`.
fn prefactor(a: &Rational, qs: &QuadSpace) -> Result<CycNum> {
    if a.is_zero() {
        return Err(Error::InvalidArgument("a = 0".into()));
    }
    let gamma = weil::weil_index(qs)?;
    let half = weil::abs_half_power(&a.recip(), qs.n(), qs.p());
    Ok((&gamma * &half).scale(&int(qs.disc_char(a) as i64)))
}

fn phase_vector(a: &Rational, qs: &QuadSpace) -> Vec<Rational> {
    qs.v1_rational().iter().map(|x| x / a).collect()
}

/// Truncated Whittaker orbital integral `I_N(a)` and whether it already equals the limit.
pub fn whittaker_orbital_truncated(phi: &SchwartzFn, a: &Rational, big_n: i64, qs: &QuadSpace) -> Result<(CycNum, bool)> {
    let pre = prefactor(a, qs)?;
    let u = phase_vector(a, qs);
    let (val, stable) = qs.truncated_integral(phi, &int(1), big_n, Some(&u))?;
    Ok(((&pre * &val).scale(&p_pow(qs.p(), big_n)), stable))
}

/// `lim_N I_N(a)`, with `stabilized_at` the first certified `N`.
pub fn whittaker_orbital(phi: &SchwartzFn, a: &Rational, qs: &QuadSpace) -> Result<DensityResult> {
    for big_n in 1..=qs.m_max() {
        let (value, stable) = whittaker_orbital_truncated(phi, a, big_n, qs)?;
        if stable {
            return Ok(DensityResult { value, stabilized_at: big_n, certified: true });
        }
    }
    Err(Error::NonStabilizing(qs.m_max()))
}

/// `I_N(a)` by direct summation over `b` in `p^{-N} Z_p`, with
/// `(w t(a) n(b) Phi)(v1)` evaluated through a pointwise Fourier transform.
pub fn whittaker_orbital_direct(phi: &SchwartzFn, a: &Rational, big_n: i64, qs: &QuadSpace) -> Result<CycNum> {
    if a.is_zero() {
        return Err(Error::InvalidArgument("a = 0".into()));
    }
    let p = qs.p();
    let gamma = weil::weil_index(qs)?;
    let v1 = qs.v1_rational();
    // `b q(x)` mod `Z_p` is constant on `b + p^{2s} Z_p` for `x` in `p^{-s} L`.
    let r = 2 * support_radius(phi, p);
    let count = u64::try_from(r + big_n).ok().map(|e| p.pow(e as u32)).ok_or(Error::InvalidArgument("N".into()))?;
    let step = p_pow(p, -big_n);
    let mut total = CycNum::zero();
    for j in 0..count {
        let b = &step * int(j as i64);
        let moved = weil::act_torus(&weil::act_unipotent(phi, &b, qs)?, a, qs)?;
        let term = &moved.fourier_at(qs.gram(), &v1)? * &padic::psi_char(&-b, p);
        total = &total + &term;
    }
    Ok((&gamma * &total).scale(&p_pow(p, -r)))
}

/// Smallest `s >= 0` with `supp Phi` inside `p^{-s} L`.
pub fn support_radius(phi: &SchwartzFn, p: u64) -> i64 {
    phi.cells()
        .map(|(c, _)| {
            let vc = c.center(p).iter().filter_map(|x| padic::valuation(x, p)).min().unwrap_or(c.level());
            -vc.min(c.level())
        })
        .max()
        .unwrap_or(0)
        .max(0)
}

/// `gamma chi(a) |a|^{-n/2} int_{X_1} Phi(x) psi(<v1, x>/a) |omega_1|`.
pub fn x_transfer_value(phi: &SchwartzFn, a: &Rational, qs: &QuadSpace) -> Result<CycNum> {
    let pre = prefactor(a, qs)?;
    let u = phase_vector(a, qs);
    let d = qs.fiber_integral(phi, &int(1), Some(&u))?;
    Ok(&pre * &d.value)
}

/// `gamma chi(a) |a|^{-n/2} int O(xi) psi(xi/a) dxi`, with `O(xi)` the orbital
/// integral of `phi` over `{x in X_1 : <v1, x> = xi}`.
///
/// The `xi`-integral is a Riemann sum over cells of `p^{-s} Z_p`, refined until two
/// consecutive levels agree. `phi` must vanish near `+-v1`.
pub fn transfer_transform(phi: &XTestFn, a: &Rational, qs: &QuadSpace) -> Result<DensityResult> {
    let pre = prefactor(a, qs)?;
    let p = qs.p();
    let f = phi.on_x();
    if f.is_zero() {
        return Ok(DensityResult { value: CycNum::zero(), stabilized_at: 0, certified: true });
    }
    let v1 = qs.v1_rational();
    let minus: Vec<Rational> = v1.iter().map(|x| -x).collect();
    if !f.evaluate(&v1)?.is_zero() || !f.evaluate(&minus)?.is_zero() {
        return Err(Error::SingularFiber);
    }
    let s = support_radius(&f, p);
    let va = padic::valuation(a, p).unwrap();
    let r0 = f.max_level().unwrap_or(0).max(va).max(1 - s);
    let sum_at = |r: i64| -> Result<CycNum> {
        let count = p.pow((r + s) as u32);
        let mut total = CycNum::zero();
        for j in 0..count {
            let xi = p_pow(p, -s) * int(j as i64);
            let o = qs.joint_fiber_volume(&f, &int(1), &xi)?.value;
            if !o.is_zero() {
                total = &total + &(&o * &padic::psi_char(&(&xi / a), p));
            }
        }
        Ok(total.scale(&p_pow(p, -r)))
    };
    let mut prev = sum_at(r0)?;
    for r in r0 + 1..=r0 + qs.m_max() {
        let next = sum_at(r)?;
        if next == prev {
            return Ok(DensityResult { value: &pre * &next, stabilized_at: r - 1, certified: false });
        }
        prev = next;
    }
    Err(Error::NonStabilizing(r0 + qs.m_max()))
}

/// Left coset representatives of `K t(p) K / K`, `K = SL2(Z_p)`, found by brute
/// force over `SL2(Z/p^2)` and certified by pairwise inequivalence and count.
pub fn hecke_coset_reps(p: u64) -> Result<Vec<SL2Elt>> {
    let m = (p * p) as i64;
    let tp = SL2Elt::t(&int(p as i64));
    let mut reps: Vec<SL2Elt> = Vec::new();
    // `k t(p) K = k' t(p) K` iff the (1,2) entry of `k^{-1} k'` vanishes mod p^2.
    let equivalent = |k: &SL2Elt, k2: &SL2Elt| -> bool {
        let x = k.inverse().mul(k2).entries()[1].clone();
        padic::valuation(&x, p).map_or(true, |v| v >= 2)
    };
    let mut ks: Vec<SL2Elt> = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    if (a * d - b * c - 1).rem_euclid(m) != 0 {
                        continue;
                    }
                    let k = lift_sl2(a, b, c, d, p);
                    if !ks.iter().any(|k2| equivalent(k2, &k)) {
                        ks.push(k);
                    }
                }
            }
        }
    }
    for (i, k) in ks.iter().enumerate() {
        if ks[..i].iter().any(|k2| equivalent(k2, k)) {
            return Err(Error::CosetEnumerationFailure("representatives are not pairwise inequivalent".into()));
        }
        reps.push(k.mul(&tp));
    }
    if reps.len() as u64 != p * p + p {
        return Err(Error::CosetEnumerationFailure(format!("found {} cosets, expected {}", reps.len(), p * p + p)));
    }
    Ok(reps)
}

/// A lift to `SL2(Z_p)` of a matrix of determinant 1 mod `p^2`.
fn lift_sl2(a: i64, b: i64, c: i64, d: i64, p: u64) -> SL2Elt {
    let (a, b, c, d) = (int(a), int(b), int(c), int(d));
    if padic::valuation(&a, p) == Some(0) {
        let d = (int(1) + &b * &c) / &a;
        SL2Elt::new(a, b, c, d).unwrap()
    } else {
        let b = (&a * &d - int(1)) / &c;
        SL2Elt::new(a, b, c, d).unwrap()
    }
}

/// `sum_i g_i Phi` over the given representatives.
pub fn hecke_sum(phi: &SchwartzFn, reps: &[SL2Elt], qs: &QuadSpace) -> Result<SchwartzFn> {
    let mut total = SchwartzFn::zero(qs.n(), qs.p());
    for g in reps {
        total = total.add(&weil::act_element(phi, g, qs, false)?)?;
    }
    Ok(total)
}

/// Whether `phi` is fixed by `n(1)` and `w`, which generate a dense subgroup of `K`.
pub fn is_k_invariant(phi: &SchwartzFn, qs: &QuadSpace) -> Result<bool> {
    let gens = [SL2Elt::n(&int(1)), SL2Elt::w()];
    for g in &gens {
        if weil::act_element(phi, g, qs, false)? != *phi {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The `SL2`-side Hecke operator `1_{K t(p) K}` applied to a `K`-invariant `Phi`.
pub fn hecke_translate(phi: &SchwartzFn, qs: &QuadSpace) -> Result<SchwartzFn> {
    if qs.n() % 2 == 1 {
        return Err(Error::MetaplecticAmbiguity);
    }
    let reps = hecke_coset_reps(qs.p())?;
    let out = hecke_sum(phi, &reps, qs)?;
    if !is_k_invariant(&out, qs)? {
        return Err(Error::CosetEnumerationFailure("translate is not K-invariant".into()));
    }
    Ok(out)
}
