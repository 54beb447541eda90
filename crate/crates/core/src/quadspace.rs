//! Self-dual quadratic lattices `(Z_p^n, q)` with a base point `v1` on `X_1`,
//! discriminant characters, residue counts and fiber measures on `X_a`.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::density::{self, Mode, Problem, Verdict};
use crate::error::{Error, Result};
use crate::exactnum::CycNum;
use crate::padic::{self, int, ival, Rational};
use crate::schwartz::{self, Cell, SchwartzFn};

/// Normalization of `disc(V)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub enum DiscConvention {
    /// `(-1)^{n(n-1)/2} det(S / 2)`: the determinant of the matrix of `q` itself.
    #[default]
    HalfGramDet,
    /// `(-1)^{n(n-1)/2} det(S)`.
    GramDet,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FiberVerdict {
    Yes,
    No,
    Undetermined(i64),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DensityResult {
    pub value: CycNum,
    pub stabilized_at: i64,
    pub certified: bool,
}

/// A polynomial constraint for [`QuadSpace::count_solutions_mod`].
#[derive(Clone, Debug)]
pub enum Constraint {
    /// `q(x) = t`.
    Quadratic(Rational),
    /// `<v1, x> = t`.
    Linear(Rational),
}

pub const DEFAULT_M_MAX: i64 = 12;

#[derive(Clone, Debug)]
pub struct QuadSpace {
    p: u64,
    gram: Vec<Vec<i64>>,
    v1: Vec<i64>,
    disc: Rational,
    convention: DiscConvention,
    m_max: i64,
    witt_hint: Option<String>,
}

impl PartialEq for QuadSpace {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.gram == other.gram && self.v1 == other.v1 && self.convention == other.convention
    }
}

impl QuadSpace {
    pub fn new(gram: Vec<Vec<i64>>, v1: Vec<i64>, p: u64) -> Result<Self> {
        Self::with_convention(gram, v1, p, DiscConvention::default())
    }

    pub fn with_convention(gram: Vec<Vec<i64>>, v1: Vec<i64>, p: u64, convention: DiscConvention) -> Result<Self> {
        if p == 2 {
            return Err(Error::EvenResidueChar(p));
        }
        if !padic::is_odd_prime(p) {
            return Err(Error::InvalidQuadSpace(alloc::format!("{p} is not an odd prime")));
        }
        let n = gram.len();
        if n < 3 {
            return Err(Error::InvalidQuadSpace(alloc::format!("dimension {n} < 3")));
        }
        if gram.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidQuadSpace("Gram matrix is not square".into()));
        }
        if (0..n).any(|i| (0..i).any(|j| gram[i][j] != gram[j][i])) {
            return Err(Error::InvalidQuadSpace("Gram matrix is not symmetric".into()));
        }
        if v1.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v1.len() });
        }
        let det = schwartz::int_det(&gram);
        match ival(det, p) {
            None => return Err(Error::NotSelfDual(i64::MAX)),
            Some(v) if v > 0 => return Err(Error::NotSelfDual(v)),
            _ => {}
        }
        let v1r: Vec<Rational> = v1.iter().map(|&x| int(x)).collect();
        let qv = schwartz::quad_value(&gram, &v1r);
        if !qv.is_one() {
            return Err(Error::BasePointInvalid(alloc::format!("q(v1) = {qv}")));
        }
        let sign = if (n * (n - 1) / 2) % 2 == 0 { 1 } else { -1 };
        let mut disc = Rational::from_integer(BigInt::from(det * sign));
        if convention == DiscConvention::HalfGramDet {
            disc /= Rational::from_integer(BigInt::from(2).pow(n as u32));
        }
        Ok(Self { p, gram, v1, disc, convention, m_max: DEFAULT_M_MAX, witt_hint: None })
    }

    pub fn with_m_max(mut self, m_max: i64) -> Self {
        self.m_max = m_max;
        self
    }

    pub fn with_witt_hint(mut self, hint: &str) -> Self {
        self.witt_hint = Some(hint.to_string());
        self
    }

    pub fn n(&self) -> usize {
        self.gram.len()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn gram(&self) -> &[Vec<i64>] {
        &self.gram
    }

    pub fn v1(&self) -> &[i64] {
        &self.v1
    }

    pub fn v1_rational(&self) -> Vec<Rational> {
        self.v1.iter().map(|&x| int(x)).collect()
    }

    /// Exact value whose square class is `disc(V)`.
    pub fn disc(&self) -> &Rational {
        &self.disc
    }

    /// `(e, u)` with `disc = p^e u`, `e` in `{0, 1}` and `u` in `{1, eps}` up to squares.
    pub fn disc_class(&self) -> (u8, u64) {
        let (e, u) = padic::split_unit(&self.disc, self.p);
        let u = if padic::legendre_unit(&u, self.p) == 1 { 1 } else { padic::nonresidue(self.p) };
        ((e.rem_euclid(2)) as u8, u)
    }

    pub fn convention(&self) -> DiscConvention {
        self.convention
    }

    pub fn m_max(&self) -> i64 {
        self.m_max
    }

    pub fn witt_hint(&self) -> Option<&str> {
        self.witt_hint.as_deref()
    }

    /// `chi_disc(a) = (a, disc)_p`.
    pub fn disc_char(&self, a: &Rational) -> i32 {
        padic::hilbert_symbol(a, &self.disc, self.p)
    }

    pub fn q(&self, v: &[Rational]) -> Rational {
        schwartz::quad_value(&self.gram, v)
    }

    /// `<u, v> = u^T S v`.
    pub fn pairing(&self, u: &[Rational], v: &[Rational]) -> Rational {
        schwartz::dot(u, &schwartz::mat_vec(&self.gram, v))
    }

    /// `S v1`, the row of `x -> <v1, x>`.
    pub fn v1_row(&self) -> Vec<i64> {
        self.gram.iter().map(|r| r.iter().zip(&self.v1).map(|(a, b)| a * b).sum()).collect()
    }

    fn check(&self, f: &SchwartzFn) -> Result<()> {
        if f.dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: f.dim() });
        }
        if f.p() != self.p {
            return Err(Error::InvalidArgument(alloc::format!("function over Q_{} on a space over Q_{}", f.p(), self.p)));
        }
        Ok(())
    }

    fn problem(&self, target: Rational, phase: Option<Vec<Rational>>, mode: Mode) -> Problem<'_> {
        Problem { gram: &self.gram, p: self.p, target, phase, joint: None, mode, cap: self.m_max }
    }

    /// Number of residues `x mod p^m` in `cell` satisfying every constraint mod `p^m`,
    /// evaluated on canonical representatives.
    pub fn count_solutions_mod(&self, constraints: &[Constraint], m: i64, cell: &Cell) -> Result<u128> {
        if m < cell.level() {
            return Err(Error::LevelTooSmall { level: m, cell_level: cell.level() });
        }
        if cell.dim() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: cell.dim() });
        }
        let v1 = self.v1_rational();
        let mut count = 0u128;
        for d in cell.descendants(m, self.p) {
            let x = d.center(self.p);
            let ok = constraints.iter().all(|c| {
                let diff = match c {
                    Constraint::Quadratic(t) => self.q(&x) - t,
                    Constraint::Linear(t) => self.pairing(&v1, &x) - t,
                };
                padic::valuation(&diff, self.p).map_or(true, |v| v >= m)
            });
            count += ok as u128;
        }
        Ok(count)
    }

    /// Whether `cell` meets `X_a`.
    pub fn meets_fiber(&self, cell: &Cell, a: &Rational) -> FiberVerdict {
        let pb = self.problem(a.clone(), None, Mode::Limit);
        match density::meets(&pb, cell) {
            Ok(Verdict::Yes) => FiberVerdict::Yes,
            Ok(Verdict::No) => FiberVerdict::No,
            Ok(Verdict::Undetermined(l)) => FiberVerdict::Undetermined(l),
            Err(_) => FiberVerdict::Undetermined(self.m_max),
        }
    }

    /// `int_{X_a} f |omega_a|`.
    pub fn fiber_volume(&self, f: &SchwartzFn, a: &Rational) -> Result<DensityResult> {
        self.fiber_integral(f, a, None)
    }

    /// `int_{X_a} f(x) psi(<u, x>) |omega_a|`.
    pub fn fiber_integral(&self, f: &SchwartzFn, a: &Rational, u: Option<&[Rational]>) -> Result<DensityResult> {
        self.check(f)?;
        if a.is_zero() {
            return Err(Error::InvalidArgument("a = 0".into()));
        }
        let w = u.map(|u| schwartz::mat_vec(&self.gram, u));
        let out = density::integrate(&self.problem(a.clone(), w, Mode::Limit), f)?;
        Ok(DensityResult { value: out.value, stabilized_at: out.level, certified: true })
    }

    /// `int_{q^{-1}(a + p^N Z_p)} f(x) psi(<u, x>) dx`, with a flag telling
    /// whether `p^N` times it already equals the fiber integral.
    pub fn truncated_integral(
        &self,
        f: &SchwartzFn,
        a: &Rational,
        big_n: i64,
        u: Option<&[Rational]>,
    ) -> Result<(CycNum, bool)> {
        self.check(f)?;
        let w = u.map(|u| schwartz::mat_vec(&self.gram, u));
        let out = density::integrate(&self.problem(a.clone(), w, Mode::Truncated(big_n)), f)?;
        Ok((out.value, out.stable))
    }

    /// Density at `(a, xi)` of the pushforward of `f dx` under `x -> (q(x), <v1, x>)`.
    ///
    /// The fiber is singular exactly at `xi^2 = 4a`, through the point `(xi/2) v1`.
    pub fn joint_fiber_volume(&self, f: &SchwartzFn, a: &Rational, xi: &Rational) -> Result<DensityResult> {
        self.check(f)?;
        let four_a = a * int(4);
        if xi * xi == four_a {
            let lam = xi / int(2);
            let pt: Vec<Rational> = self.v1_rational().iter().map(|x| x * &lam).collect();
            if !f.evaluate(&pt)?.is_zero() {
                return Err(Error::SingularFiber);
            }
        }
        let mut pb = self.problem(a.clone(), None, Mode::Joint);
        pb.joint = Some((self.v1_row(), xi.clone()));
        let out = density::integrate(&pb, f)?;
        Ok(DensityResult { value: out.value, stabilized_at: out.level, certified: true })
    }

    /// `#{x in F_p^n : q(x) = a}`.
    pub fn point_count_residue(&self, a: &Rational) -> u64 {
        let p = self.p as i64;
        let target = padic::reduce_integral(a, self.p, 1);
        let target = i64::try_from(&target).unwrap();
        let n = self.n();
        let mut x = vec![0i64; n];
        let mut count = 0;
        loop {
            let mut q2 = 0i64;
            for i in 0..n {
                for j in 0..n {
                    q2 += self.gram[i][j] * x[i] * x[j];
                }
            }
            // q = q2 / 2 and 2 is invertible mod p
            if (q2 - 2 * target).rem_euclid(p) == 0 {
                count += 1;
            }
            let mut i = 0;
            loop {
                if i == n {
                    return count;
                }
                x[i] += 1;
                if x[i] < p {
                    break;
                }
                x[i] = 0;
                i += 1;
            }
        }
    }

    /// Orthogonal basis over `Z_(p)`: returns the diagonal entries `q(e_i')`,
    /// all p-adic units.
    pub fn diagonal_units(&self) -> Vec<Rational> {
        let n = self.n();
        let p = self.p;
        let mut basis: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| int((i == j) as i64)).collect()).collect();
        let mut out = Vec::new();
        while !basis.is_empty() {
            let unit = |v: &Vec<Rational>| padic::valuation(&self.q(v), p) == Some(0);
            let pick = match basis.iter().position(unit) {
                Some(i) => basis.remove(i),
                None => {
                    let k = basis.len();
                    let (i, j) = (0..k)
                        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                        .find(|&(i, j)| padic::valuation(&self.pairing(&basis[i], &basis[j]), p) == Some(0))
                        .expect("unimodular lattice has a unit pairing");
                    let v: Vec<Rational> = basis[i].iter().zip(&basis[j]).map(|(a, b)| a + b).collect();
                    basis[i] = v;
                    basis.remove(i)
                }
            };
            let qv = self.q(&pick);
            let two_q = &qv * int(2);
            for b in basis.iter_mut() {
                let c = self.pairing(b, &pick) / &two_q;
                for (x, y) in b.iter_mut().zip(&pick) {
                    *x -= &c * y;
                }
            }
            out.push(qv);
        }
        out
    }

    pub fn is_split_sign(&self) -> bool {
        self.disc.is_positive()
    }
}
