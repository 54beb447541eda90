//! Ball-by-ball evaluation of integrals over level sets of `q`.
//!
//! A cell `c + p^k L` is rescaled to an integral ball `y0 + p^m Z_p^n` via
//! `x = p^{-s} y`. On such a ball `q(y) = q(y0) + p^m <Sy0, z> + p^{2m} q(z)`,
//! so once `m > v(Sy0)` the image of `q` is the coset `q(y0) + p^{m + v(Sy0)}`
//! with uniform pushforward density (Hensel). With a second linear map the
//! same argument runs on a 2x2 Hermite form of the Jacobian. Balls that are
//! neither certified nor excluded are split into their `p^n` children.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exactnum::CycNum;
use crate::padic::{self, ipow, ival, p_pow, to_residue, valuation, Rational};
use crate::schwartz::{Cell, SchwartzFn};

const INF: i64 = i64::MAX / 4;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Mode {
    /// Density of the pushforward under `q` at the target.
    Limit,
    /// Plain integral over `q^{-1}(T + p^N Z_p)`.
    Truncated(i64),
    /// Density of the pushforward under `(q, <r, .>)` at `(T, xi)`.
    Joint,
}

pub(crate) struct Problem<'a> {
    pub gram: &'a [Vec<i64>],
    pub p: u64,
    pub target: Rational,
    /// `w` with phase `psi(w . x)`; not used in joint mode.
    pub phase: Option<Vec<Rational>>,
    /// `(r, xi)` for joint mode.
    pub joint: Option<(Vec<i64>, Rational)>,
    pub mode: Mode,
    /// Largest ball level (in the original coordinates) that may be visited.
    pub cap: i64,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub value: CycNum,
    pub level: i64,
    pub stable: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Verdict {
    Yes,
    No,
    Undetermined(i64),
}

/// Weighted phases, keyed by `frac(phase)`.
#[derive(Default)]
struct PhaseSum(BTreeMap<(BigInt, u32), Rational>);

impl PhaseSum {
    fn add(&mut self, p: u64, phase: &Rational, w: Rational) {
        if w.is_zero() {
            return;
        }
        let key = padic::frac_part(phase, p);
        let slot = self.0.entry(key).or_insert_with(Rational::zero);
        *slot += w;
    }

    fn value(&self, p: u64) -> CycNum {
        self.0
            .iter()
            .map(|((a, s), w)| {
                let order = p.pow(*s);
                let e = i64::try_from(a).expect("phase numerator fits i64");
                CycNum::zeta(order, e).scale(w)
            })
            .sum()
    }
}

enum Step {
    /// Terminal: optional `(weight, phase)` and whether the truncated value equals the limit.
    Done(Option<(Rational, Rational)>, bool),
    Split,
}

/// Per-cell data in the rescaled coordinates.
struct Local<'a> {
    pb: &'a Problem<'a>,
    n: usize,
    s: i64,
    modulus: i128,
    kbits: i64,
    /// `2 T'` modulo `p^K`, `T' = p^{2s} T`.
    t2: i128,
    t_scaled: Rational,
    w: Option<Vec<Rational>>,
    vw: i64,
    r: Vec<i128>,
    vr: i64,
    xi_res: i128,
    xi_scaled: Rational,
}

fn min_val_rat(v: &[Rational], p: u64) -> i64 {
    v.iter().filter_map(|x| valuation(x, p)).min().unwrap_or(INF)
}

fn to_rat(x: i128) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

/// Hermite data of the 2-row Jacobian `[r1; r2]`.
struct Hermite {
    alpha: i64,
    beta: i64,
    h21: Rational,
    c: Rational,
}

fn hermite(r1: &[i128], r2: &[Rational], p: u64) -> Option<Hermite> {
    let (j, alpha) = r1.iter().enumerate().filter_map(|(i, &x)| ival(x, p).map(|v| (i, v))).min_by_key(|t| t.1)?;
    let h11 = to_rat(r1[j]);
    let h21 = r2[j].clone();
    let c = &h21 / &h11;
    let reduced: Vec<Rational> = r2.iter().zip(r1).map(|(b, &a)| b - &c * to_rat(a)).collect();
    let beta = reduced.iter().filter_map(|x| valuation(x, p)).min()?;
    Some(Hermite { alpha, beta, h21, c })
}

impl Hermite {
    fn certified(&self, m: i64, p: u64) -> bool {
        if m < 1 + self.alpha {
            return false;
        }
        match valuation(&self.h21, p) {
            None => true,
            Some(v21) => m - self.alpha + v21 >= 1 + self.beta,
        }
    }
}

impl<'a> Local<'a> {
    fn new(pb: &'a Problem<'a>, cell: &Cell) -> Result<Option<(Self, Vec<i128>, i64)>> {
        let p = pb.p;
        let n = cell.dim();
        let s = (cell.scale() as i64).max(-cell.level());
        let m0 = s + cell.level();
        let lift = ipow(p, (s - cell.scale() as i64) as u32);
        let y0: Vec<i128> = cell.coords().iter().map(|c| c * lift).collect();
        let ycap = s + pb.cap;
        let kbits = 2 * ycap.max(m0) + 4;
        if (kbits as f64) * libm::log2(p as f64) > 118.0 {
            return Err(Error::Precision(alloc::format!("level cap {} too deep for p = {}", pb.cap, p)));
        }
        let modulus = ipow(p, kbits as u32);
        let t_scaled = &pb.target * p_pow(p, 2 * s);
        let Some(t2) = to_residue(&(&t_scaled * Rational::from_integer(BigInt::from(2))), p, 0, modulus) else {
            return Ok(None);
        };
        let w = pb.phase.as_ref().map(|w| w.iter().map(|x| x * p_pow(p, -s)).collect::<Vec<_>>());
        let vw = w.as_deref().map_or(INF, |w| min_val_rat(w, p));
        let (r, xi_scaled) = match &pb.joint {
            Some((r, xi)) => (r.iter().map(|&x| x as i128).collect::<Vec<_>>(), xi * p_pow(p, s)),
            None => (Vec::new(), Rational::zero()),
        };
        let vr = r.iter().filter_map(|&x| ival(x, p)).min().unwrap_or(INF);
        let xi_res = if pb.mode == Mode::Joint {
            match to_residue(&xi_scaled, p, 0, modulus) {
                Some(x) => x,
                None => return Ok(None),
            }
        } else {
            0
        };
        let local = Self { pb, n, s, modulus, kbits, t2, t_scaled, w, vw, r, vr, xi_res, xi_scaled };
        Ok(Some((local, y0, m0)))
    }

    fn vdiff(&self, x: i128) -> i64 {
        ival(x.rem_euclid(self.modulus), self.pb.p).unwrap_or(self.kbits)
    }

    fn grad_and_q2(&self, y: &[i128]) -> (Vec<i128>, i128) {
        let g: Vec<i128> = self
            .pb
            .gram
            .iter()
            .map(|row| row.iter().zip(y).map(|(&a, &b)| a as i128 * b).sum())
            .collect();
        let q2 = g.iter().zip(y).map(|(a, b)| a * b).sum();
        (g, q2)
    }

    fn step(&self, y0: &[i128], m: i64) -> Step {
        let p = self.pb.p;
        let n = self.n as i64;
        let (g, q2) = self.grad_and_q2(y0);
        let e = g.iter().filter_map(|&x| ival(x, p)).min().unwrap_or(INF);
        let mu = (m + e).min(2 * m);
        let vt = self.vdiff(self.t2 - q2);
        let nprime = match self.pb.mode {
            Mode::Truncated(big_n) => big_n + 2 * self.s,
            _ => INF,
        };
        if vt < mu.min(nprime) {
            return Step::Done(None, true);
        }
        let gap = || &self.t_scaled - to_rat(q2) / Rational::from_integer(BigInt::from(2));
        let vol = p_pow(p, -m * n);

        if self.pb.mode == Mode::Joint {
            let l0: i128 = self.r.iter().zip(y0).map(|(a, b)| a * b).sum();
            if self.vdiff(self.xi_res - l0) < m + self.vr {
                return Step::Done(None, true);
            }
            let r2: Vec<Rational> = self.r.iter().map(|&x| to_rat(x)).collect();
            if let Some(h) = hermite(&g, &r2, p) {
                if h.certified(m, p) {
                    let hit = vt >= m + h.alpha && {
                        let off = &self.xi_scaled - to_rat(l0) - gap() * &h.c;
                        valuation(&off, p).map_or(true, |v| v >= m + h.beta)
                    };
                    let d = p_pow(p, -m * n + 2 * m + h.alpha + h.beta);
                    return Step::Done(hit.then(|| (d, Rational::zero())), true);
                }
            }
            return Step::Split;
        }

        let (const_phase, l0) = match &self.w {
            None => (true, Rational::zero()),
            Some(w) => (self.vw + m >= 0, w.iter().zip(y0).fold(Rational::zero(), |acc, (a, &b)| acc + a * to_rat(b))),
        };
        let single = m >= 1 + e;
        let hermite_data = || {
            let w = self.w.as_ref().unwrap();
            hermite(&g, w, p).filter(|h| h.certified(m, p))
        };
        match self.pb.mode {
            Mode::Limit => {
                if single && const_phase {
                    return Step::Done(Some((p_pow(p, -m * n + m + e), l0)), true);
                }
                if !const_phase {
                    if let Some(h) = hermite_data() {
                        if vt >= m + h.alpha && m + h.beta >= 0 {
                            let d = p_pow(p, -m * n + 2 * m + h.alpha + h.beta) * p_pow(p, -(m + h.beta));
                            let phase = &l0 + gap() * &h.c;
                            return Step::Done(Some((d, phase)), true);
                        }
                        return Step::Done(None, true);
                    }
                }
                Step::Split
            }
            Mode::Truncated(_) => {
                if single && const_phase {
                    let w = p_pow(p, -m * n + m + e) * p_pow(p, -(m + e).max(nprime));
                    return Step::Done(Some((w, l0)), nprime >= m + e);
                }
                let inside = mu >= nprime && vt >= nprime;
                if const_phase && inside {
                    return Step::Done(Some((vol, l0)), false);
                }
                if !const_phase {
                    if let Some(h) = hermite_data() {
                        let stable = nprime >= m + h.alpha
                            && valuation(&h.c, p).map_or(true, |vc| vc + nprime >= 0);
                        if m + h.beta < 0 || vt < nprime.min(m + h.alpha) {
                            return Step::Done(None, stable);
                        }
                        let r = nprime.max(m + h.alpha);
                        if valuation(&h.c, p).is_some_and(|vc| vc + r < 0) {
                            return Step::Done(None, stable);
                        }
                        let shift = if nprime >= m + h.alpha { gap() } else { Rational::zero() };
                        let d = p_pow(p, -m * n + 2 * m + h.alpha + h.beta) * p_pow(p, -(m + h.beta)) * p_pow(p, -r);
                        let phase = &l0 + shift * &h.c;
                        return Step::Done(Some((d, phase)), stable);
                    }
                    if inside {
                        return Step::Done(None, false);
                    }
                }
                Step::Split
            }
            Mode::Joint => unreachable!(),
        }
    }

    fn children(&self, y0: &[i128], m: i64) -> Vec<Vec<i128>> {
        let p = self.pb.p;
        let step = ipow(p, m as u32);
        let total = (p as usize).pow(self.n as u32);
        let mut out = Vec::with_capacity(total);
        let mut digits = vec![0i128; self.n];
        for _ in 0..total {
            out.push(y0.iter().zip(&digits).map(|(y, d)| y + d * step).collect());
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

    /// Scale factor from the `y`-integral back to the original coordinates.
    fn jacobian(&self) -> Rational {
        let n = self.n as i64;
        let k = match self.pb.mode {
            Mode::Limit => n - 2,
            Mode::Truncated(_) => n,
            Mode::Joint => n - 3,
        };
        p_pow(self.pb.p, self.s * k)
    }

    fn run(&self, y0: Vec<i128>, m0: i64) -> Result<(CycNum, i64, bool)> {
        let p = self.pb.p;
        let mut sum = PhaseSum::default();
        let mut level = m0 - self.s;
        let mut stable = true;
        let mut stack = vec![(y0, m0)];
        while let Some((y, m)) = stack.pop() {
            match self.step(&y, m) {
                Step::Done(hit, st) => {
                    level = level.max(m - self.s);
                    stable &= st;
                    if let Some((w, phase)) = hit {
                        sum.add(p, &phase, w);
                    }
                }
                Step::Split => {
                    if m + 1 - self.s > self.pb.cap {
                        return Err(Error::NonStabilizing(self.pb.cap));
                    }
                    stack.extend(self.children(&y, m).into_iter().map(|c| (c, m + 1)));
                }
            }
        }
        Ok((sum.value(p).scale(&self.jacobian()), level, stable))
    }

    fn meets(&self, y0: Vec<i128>, m0: i64) -> Verdict {
        let p = self.pb.p;
        let mut stack = vec![(y0, m0)];
        let mut undetermined = None;
        while let Some((y, m)) = stack.pop() {
            let (g, q2) = self.grad_and_q2(&y);
            let e = g.iter().filter_map(|&x| ival(x, p)).min().unwrap_or(INF);
            if self.vdiff(self.t2 - q2) < (m + e).min(2 * m) {
                continue;
            }
            if m >= 1 + e {
                return Verdict::Yes;
            }
            if m + 1 - self.s > self.pb.cap {
                undetermined = Some(m - self.s);
                continue;
            }
            stack.extend(self.children(&y, m).into_iter().map(|c| (c, m + 1)));
        }
        match undetermined {
            Some(l) => Verdict::Undetermined(l),
            None => Verdict::No,
        }
    }
}

/// `sum_cells coeff * (integral over the cell)` for the given problem.
pub(crate) fn integrate(pb: &Problem<'_>, f: &SchwartzFn) -> Result<Outcome> {
    let mut value = CycNum::zero();
    let mut level = i64::MIN;
    let mut stable = true;
    for (cell, coeff) in f.cells() {
        level = level.max(cell.level());
        let Some((local, y0, m0)) = Local::new(pb, cell)? else { continue };
        let (v, l, st) = local.run(y0, m0)?;
        value = &value + &(&v * coeff);
        level = level.max(l);
        stable &= st;
    }
    if level == i64::MIN {
        level = 0;
    }
    Ok(Outcome { value, level, stable })
}

/// Whether `cell` meets `{q = target}`.
pub(crate) fn meets(pb: &Problem<'_>, cell: &Cell) -> Result<Verdict> {
    match Local::new(pb, cell)? {
        None => Ok(Verdict::No),
        Some((local, y0, m0)) => Ok(local.meets(y0, m0)),
    }
}
