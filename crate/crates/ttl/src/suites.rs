//! The verification suites behind each command.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use ttl_core::lfactor::{self, LValue, SatakeData};
use ttl_core::padic::{self, int, p_pow};
use ttl_core::transfer::{self, basic_phi};
use ttl_core::weil::{self, Factor, SL2Elt};
use ttl_core::{Cell, CycNum, Error, QuadSpace, Rational, SchwartzFn};

use crate::config::{Command, JobConfig};
use crate::wire::{cyc_json, quadspace_json, sl2_json};
use crate::TtlError;

/// Cell budget for the random group elements of `verify-weil`.
pub const DEFAULT_CELL_BUDGET: f64 = 20_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Mismatch,
    NonStabilized,
}

#[derive(Clone, Debug)]
pub struct Case {
    pub id: String,
    pub lhs: Value,
    pub rhs: Value,
    pub equal: bool,
    pub levels: Value,
    pub extra: Value,
    pub status: Status,
    pub ms: u128,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub suite: String,
    pub meta: Value,
    pub cases: Vec<Case>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.cases.iter().all(|c| c.status == Status::Pass)
    }

    /// 0 all pass, 1 some mismatch, 2 some case did not stabilize.
    pub fn exit_code(&self) -> i32 {
        if self.cases.iter().any(|c| c.status == Status::Mismatch) {
            1
        } else if self.cases.iter().any(|c| c.status == Status::NonStabilized) {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Value {
        let cases: Vec<Value> = self
            .cases
            .iter()
            .map(|c| {
                let mut v = json!({
                    "id": c.id,
                    "lhs": c.lhs,
                    "rhs": c.rhs,
                    "equal": c.equal,
                    "levels": c.levels,
                    "status": match c.status {
                        Status::Pass => "pass",
                        Status::Mismatch => "mismatch",
                        Status::NonStabilized => "non-stabilized",
                    },
                    "ms": c.ms as u64,
                });
                if let (Value::Object(m), Value::Object(extra)) = (&mut v, &c.extra) {
                    m.extend(extra.clone());
                }
                v
            })
            .collect();
        json!({
            "suite": self.suite,
            "meta": self.meta,
            "cases": cases,
            "pass": self.pass(),
            "exit_code": self.exit_code(),
        })
    }
}

/// Outcome of one case before timing is attached.
struct Outcome {
    lhs: Value,
    rhs: Value,
    equal: bool,
    levels: Value,
    extra: Value,
}

impl Outcome {
    fn cyc(lhs: &CycNum, rhs: &CycNum, levels: Value) -> Self {
        Self { lhs: cyc_json(lhs), rhs: cyc_json(rhs), equal: lhs == rhs, levels, extra: Value::Null }
    }
}

type Job<'a> = Box<dyn Fn() -> Result<Outcome, Error> + Send + Sync + 'a>;

fn run_cases(jobs: Vec<(String, Job<'_>)>) -> Vec<Case> {
    jobs.into_par_iter()
        .map(|(id, job)| {
            let t = Instant::now();
            let out = job();
            let ms = t.elapsed().as_millis();
            match out {
                Ok(o) => Case {
                    id,
                    status: if o.equal { Status::Pass } else { Status::Mismatch },
                    lhs: o.lhs,
                    rhs: o.rhs,
                    equal: o.equal,
                    levels: o.levels,
                    extra: o.extra,
                    ms,
                },
                Err(e) => {
                    let status = match e {
                        Error::NonStabilizing(_) | Error::NeedsRefinement(_) => Status::NonStabilized,
                        _ => Status::Mismatch,
                    };
                    Case {
                        id,
                        lhs: Value::Null,
                        rhs: Value::Null,
                        equal: false,
                        levels: json!({}),
                        extra: json!({"error": e.to_string()}),
                        status,
                        ms,
                    }
                }
            }
        })
        .collect()
}

/// Runs the suite named by `command` (or by the config) on a pool of `threads` workers.
pub fn run_job(cfg: &JobConfig, command: Option<Command>, threads: Option<usize>) -> Result<Report, TtlError> {
    let command = match (command, cfg.command) {
        (Some(a), Some(b)) if a != b => {
            return Err(TtlError::Config(format!("command {} does not match config command {}", a.name(), b.name())))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(TtlError::Config("no command".into())),
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(TtlError::Config("--threads must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| TtlError::Config(e.to_string()))?;
    pool.install(|| run_in_pool(cfg, command))
}

fn run_in_pool(cfg: &JobConfig, command: Command) -> Result<Report, TtlError> {
    let qs = cfg.quadspace()?;
    let meta = json!({"quadspace": quadspace_json(&qs), "seed": cfg.seed});
    let mut cases = match command {
        Command::VerifyTransfer => verify_transfer(cfg, &qs)?,
        Command::VerifyFl => verify_fl(cfg, &qs)?,
        Command::VerifyWeil => verify_weil(cfg, &qs)?,
        Command::Density => density(cfg, &qs)?,
        Command::Lfactor => lfactor_suite(cfg, &qs)?,
        Command::HeckeCheck => hecke_check(cfg, &qs)?,
    };
    cases.sort_by(|x, y| x.id.cmp(&y.id));
    Ok(Report { suite: command.name().into(), meta, cases })
}

fn identity_jobs<'a>(prefix: &str, phi: &'a SchwartzFn, grid: &[Rational], qs: &'a QuadSpace) -> Vec<(String, Job<'a>)> {
    grid.iter()
        .map(|a| {
            let a = a.clone();
            let id = format!("{prefix}a={a}");
            let job: Job<'a> = Box::new(move || {
                let w = transfer::whittaker_orbital(phi, &a, qs)?;
                let x = transfer::x_transfer_value(phi, &a, qs)?;
                Ok(Outcome::cyc(&w.value, &x, json!({"whittaker": w.stabilized_at})))
            });
            (id, job)
        })
        .collect()
}

fn direct_jobs<'a>(prefix: &str, phi: &'a SchwartzFn, grid: &[Rational], n_max: i64, qs: &'a QuadSpace) -> Vec<(String, Job<'a>)> {
    let mut out: Vec<(String, Job<'a>)> = Vec::new();
    for a in grid {
        for big_n in 1..=n_max {
            let id = format!("{prefix}direct/a={a}/N={big_n}");
            let a = a.clone();
            let job: Job<'a> = Box::new(move || {
                let (t, _) = transfer::whittaker_orbital_truncated(phi, &a, big_n, qs)?;
                let d = transfer::whittaker_orbital_direct(phi, &a, big_n, qs)?;
                Ok(Outcome::cyc(&t, &d, json!({"N": big_n})))
            });
            out.push((id, job));
        }
    }
    out
}

fn verify_transfer(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let phis = cfg.phis(qs)?;
    let grid = cfg.a_grid(qs.p())?;
    let width = phis.len().to_string().len();
    let mut jobs = Vec::new();
    for (i, phi) in phis.iter().enumerate() {
        let prefix = format!("phi{i:0width$}/");
        jobs.extend(identity_jobs(&prefix, phi, &grid, qs));
        if let Some(n) = cfg.caps.n_max {
            jobs.extend(direct_jobs(&prefix, phi, &grid, n, qs));
        }
    }
    Ok(run_cases(jobs))
}

/// `1_{X_1 cap L}` assembled from the level-one residue classes with `q = 1 mod p`.
pub fn residue_indicator(qs: &QuadSpace) -> SchwartzFn {
    let p = qs.p();
    let n = qs.n();
    let mut cells = std::collections::BTreeMap::new();
    let mut x = vec![0i64; n];
    loop {
        let v: Vec<Rational> = x.iter().map(|&t| int(t)).collect();
        let d = qs.q(&v) - int(1);
        if padic::valuation(&d, p).map_or(true, |k| k >= 1) {
            cells.insert(Cell::new(&v, 1, p), CycNum::one());
        }
        let mut i = 0;
        while i < n {
            x[i] += 1;
            if x[i] < p as i64 {
                break;
            }
            x[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
    SchwartzFn::from_disjoint(n, p, cells).expect("residue classes are disjoint")
}

/// `|a|^{n/2} chi(a) 1_{|a| <= 1}`.
pub fn basic_torus_closed_form(qs: &QuadSpace, a: &Rational) -> CycNum {
    if padic::valuation(a, qs.p()).unwrap() < 0 {
        return CycNum::zero();
    }
    weil::abs_half_power(a, qs.n(), qs.p()).scale(&int(qs.disc_char(a) as i64))
}

fn verify_fl(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let grid = cfg.a_grid(qs.p())?;
    let phi0 = basic_phi(qs);
    let p = qs.p();
    let mut jobs: Vec<(String, Job<'_>)> = Vec::new();
    let phi0_ref = &phi0;
    jobs.push((
        "restriction".into(),
        Box::new(move || {
            let lhs = transfer::restrict_x(phi0_ref, qs)?;
            let rhs = transfer::restrict_x(&residue_indicator(qs), qs)?;
            let vl = qs.fiber_volume(&lhs.on_x(), &int(1))?.value;
            let vr = qs.fiber_volume(&rhs.on_x(), &int(1))?.value;
            Ok(Outcome { lhs: cyc_json(&vl), rhs: cyc_json(&vr), equal: lhs.equals(&rhs)?, levels: json!({}), extra: Value::Null })
        }),
    ));
    for k in -2..=2i64 {
        let a = p_pow(p, k);
        jobs.push((
            format!("torus/a={a}"),
            Box::new(move || {
                let lhs = if qs.n() % 2 == 0 {
                    transfer::p_value(phi0_ref, &SL2Elt::t(&a), qs)?
                } else {
                    transfer::p_value_factored(phi0_ref, false, &a, &int(0), qs)?
                };
                Ok(Outcome::cyc(&lhs, &basic_torus_closed_form(qs, &a), Value::Null))
            }),
        ));
    }
    jobs.extend(identity_jobs("identity/", phi0_ref, &grid, qs));
    if let Some(n) = cfg.caps.n_max {
        jobs.extend(direct_jobs("", phi0_ref, &grid, n, qs));
    }
    Ok(run_cases(jobs))
}

/// `p^v u` with `v` in `-1..=1` and `u` a small unit.
fn random_scalar(rng: &mut ChaCha8Rng, p: u64) -> Rational {
    let units = [1i64, -1, 2, -2, 4, 5, 7];
    loop {
        let u = units[rng.gen_range(0..units.len())];
        if u.rem_euclid(p as i64) != 0 {
            return p_pow(p, rng.gen_range(-1..=1)) * int(u);
        }
    }
}

/// `(s, k)` with the support in `p^{-s} L` and constancy on `p^k L`.
type Shape = (i64, i64);

/// Shape of `omega(g) f` for `f` of shape `shape`, and the largest `s + k` met on the way.
pub fn word_shape(shape: Shape, g: &SL2Elt, p: u64) -> (Shape, i64) {
    let (mut s, mut k) = shape;
    let mut worst = s + k;
    for f in weil::factor_word(g, p).iter().rev() {
        match f {
            Factor::N(b) => {
                if let Some(v) = padic::valuation(b, p) {
                    k = k.max(s - v).max((-v + 1).div_euclid(2));
                }
            }
            Factor::T(a) => {
                let v = padic::valuation(a, p).expect("nonzero torus entry");
                s += v;
                k -= v;
            }
            Factor::W => std::mem::swap(&mut s, &mut k),
        }
        worst = worst.max(s + k);
    }
    ((s, k), worst)
}

/// Shape of a test function.
pub fn shape_of(phi: &SchwartzFn) -> Shape {
    let p = phi.p();
    (transfer::support_radius(phi, p), phi.max_level().unwrap_or(0))
}

/// A random element of `SL2(Q)` with entries `p^v u`, `v` in `-1..=1`; about a third have `c = 0`.
pub fn random_sl2(rng: &mut ChaCha8Rng, p: u64) -> SL2Elt {
    let a = random_scalar(rng, p);
    let b = if rng.gen_bool(0.3) { int(0) } else { random_scalar(rng, p) };
    let c = if rng.gen_bool(0.3) { int(0) } else { random_scalar(rng, p) };
    let d = (int(1) + &b * &c) / &a;
    SL2Elt::new(a, b, c, d).expect("determinant one")
}

/// A random pair whose three actions on functions of shape `shape` stay within
/// `p^{n (s + k)} <= budget` cells.
pub fn random_sl2_pair(rng: &mut ChaCha8Rng, p: u64, n: usize, shape: Shape, budget: f64) -> Option<(SL2Elt, SL2Elt)> {
    let cap = (budget.ln() / (n as f64 * (p as f64).ln()) + 1e-9).floor() as i64;
    for _ in 0..100_000 {
        let g1 = random_sl2(rng, p);
        let g2 = random_sl2(rng, p);
        let (mid, w2) = word_shape(shape, &g2, p);
        let (_, w1) = word_shape(mid, &g1, p);
        let (_, w12) = word_shape(shape, &g1.mul(&g2), p);
        if w1.max(w2).max(w12) <= cap {
            return Some((g1, g2));
        }
    }
    None
}

fn verify_weil(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let phis = cfg.phis(qs)?;
    let p = qs.p();
    let n = qs.n();
    let width = phis.len().to_string().len();
    let mut jobs: Vec<(String, Job<'_>)> = Vec::new();
    if n % 2 == 0 {
        jobs.push((
            "gamma_squared".into(),
            Box::new(move || {
                let g = weil::weil_index(qs)?;
                let chi = CycNum::from_int(qs.disc_char(&int(-1)) as i64);
                Ok(Outcome::cyc(&(&g * &g), &chi, Value::Null))
            }),
        ));
    }
    let minus: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| if i == j { -1 } else { 0 }).collect()).collect();
    let minus = std::sync::Arc::new(minus);
    for (i, phi) in phis.iter().enumerate() {
        let m = minus.clone();
        jobs.push((
            format!("fourier_twice/phi{i:0width$}"),
            Box::new(move || {
                let ff = phi.fourier(qs.gram())?.fourier(qs.gram())?;
                let refl = phi.pushforward_linear(&m);
                let probe = qs.v1_rational();
                Ok(Outcome {
                    lhs: cyc_json(&ff.evaluate(&probe)?),
                    rhs: cyc_json(&refl.evaluate(&probe)?),
                    equal: ff == refl,
                    levels: json!({}),
                    extra: Value::Null,
                })
            }),
        ));
        jobs.push((
            format!("plancherel/phi{i:0width$}"),
            Box::new(move || {
                let f = phi.fourier(qs.gram())?;
                Ok(Outcome::cyc(&phi.abs2().integrate(), &f.abs2().integrate(), Value::Null))
            }),
        ));
    }
    if n % 2 == 0 {
        let pairs = cfg.grid.pairs.unwrap_or(10);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        if phis.is_empty() {
            return Err(TtlError::Config("no test function".into()));
        }
        let budget = cfg.grid.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET);
        for j in 0..pairs {
            let phi = &phis[j % phis.len()];
            let (g1, g2) = random_sl2_pair(&mut rng, p, n, shape_of(phi), budget)
                .ok_or_else(|| TtlError::Config(format!("no group element pair within {budget} cells")))?;
            let prod = g1.mul(&g2);
            jobs.push((
                format!("group_law/pair{j:03}"),
                Box::new(move || {
                    let lhs = weil::act_element(phi, &prod, qs, false)?;
                    let rhs = weil::act_element(&weil::act_element(phi, &g2, qs, false)?, &g1, qs, false)?;
                    let probe = qs.v1_rational();
                    Ok(Outcome {
                        lhs: cyc_json(&lhs.evaluate(&probe)?),
                        rhs: cyc_json(&rhs.evaluate(&probe)?),
                        equal: lhs == rhs,
                        levels: json!({}),
                        extra: json!({"g1": sl2_json(&g1), "g2": sl2_json(&g2)}),
                    })
                }),
            ));
        }
    }
    Ok(run_cases(jobs))
}


fn density(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let phis = cfg.phis(qs)?;
    let grid = cfg.a_grid(qs.p())?;
    let xis = cfg.xi_grid()?;
    let basic = matches!(&cfg.phi, crate::config::PhiIn::Named(_));
    let width = phis.len().to_string().len();
    let mut jobs: Vec<(String, Job<'_>)> = Vec::new();
    for (i, phi) in phis.iter().enumerate() {
        let prefix = if phis.len() == 1 { String::new() } else { format!("phi{i:0width$}/") };
        for a_ref in &grid {
            let a = a_ref.clone();
            jobs.push((
                format!("{prefix}a={a}"),
                Box::new(move || {
                    let d = qs.fiber_volume(phi, &a)?;
                    let unit = padic::valuation(&a, qs.p()) == Some(0);
                    // Smooth reduction: the volume is p^{-(n-1)} #X_a(F_p).
                    let rhs = if basic && unit {
                        let count = qs.point_count_residue(&a) as i64;
                        let v = CycNum::from_rational(int(count) * p_pow(qs.p(), -(qs.n() as i64 - 1)));
                        Some(v)
                    } else {
                        None
                    };
                    let equal = d.certified && rhs.as_ref().map_or(true, |r| r == &d.value);
                    Ok(Outcome {
                        lhs: cyc_json(&d.value),
                        rhs: rhs.as_ref().map_or(Value::Null, cyc_json),
                        equal,
                        levels: json!({"stabilized_at": d.stabilized_at}),
                        extra: json!({
                            "value": plain(&d.value),
                            "stabilized_at": d.stabilized_at,
                            "certified": d.certified,
                        }),
                    })
                }),
            ));
            for xi in &xis {
                let (a, xi) = (a_ref.clone(), xi.clone());
                jobs.push((
                    format!("{prefix}a={a}/xi={xi}"),
                    Box::new(move || {
                        let d = qs.joint_fiber_volume(phi, &a, &xi)?;
                        Ok(Outcome {
                            lhs: cyc_json(&d.value),
                            rhs: Value::Null,
                            equal: d.certified,
                            levels: json!({"stabilized_at": d.stabilized_at}),
                            extra: json!({
                                "value": plain(&d.value),
                                "stabilized_at": d.stabilized_at,
                                "certified": d.certified,
                            }),
                        })
                    }),
                ));
            }
        }
    }
    Ok(run_cases(jobs))
}

/// `8/9` rather than `(8/9)` for rational values.
fn plain(x: &CycNum) -> String {
    x.as_rational().map_or_else(|| x.to_string(), |r| r.to_string())
}

fn lvalue_json(v: &LValue) -> Value {
    match v {
        LValue::Exact(x) => cyc_json(x),
        LValue::Float(f) => json!({"float": f}),
    }
}

fn lfactor_suite(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let conv = cfg.metaplectic();
    let alphas = cfg.alphas()?;
    let mut jobs: Vec<(String, Job<'_>)> = Vec::new();
    for (i, alpha) in alphas.into_iter().enumerate() {
        let sigma = SatakeData::for_space(qs, alpha).map_err(TtlError::Core)?;
        jobs.push((
            format!("alpha{i:03}"),
            Box::new(move || {
                let a = lfactor::assembly_check(qs, &sigma, conv)?;
                Ok(Outcome {
                    lhs: lvalue_json(&a.lhs.value),
                    rhs: lvalue_json(&a.rhs.value),
                    equal: a.pass,
                    levels: json!({}),
                    extra: json!({
                        "volume": a.volume.to_string(),
                        "residual": a.residual,
                        "exact": a.exact,
                        "alpha": format!("{:?}", sigma.alpha),
                    }),
                })
            }),
        ));
    }
    Ok(run_cases(jobs))
}

fn hecke_check(cfg: &JobConfig, qs: &QuadSpace) -> Result<Vec<Case>, TtlError> {
    let grid = cfg.a_grid(qs.p())?;
    let p = qs.p();
    let t0 = Instant::now();
    let reps = transfer::hecke_coset_reps(p);
    let count_case = Case {
        id: "coset_count".into(),
        lhs: json!(reps.as_ref().map_or(0, |r| r.len())),
        rhs: json!(p * p + p),
        equal: reps.is_ok(),
        levels: json!({}),
        extra: reps.as_ref().err().map_or(Value::Null, |e| json!({"error": e.to_string()})),
        status: if reps.is_ok() { Status::Pass } else { Status::Mismatch },
        ms: t0.elapsed().as_millis(),
    };
    let t1 = Instant::now();
    let translated = transfer::hecke_translate(&basic_phi(qs), qs);
    let inv_case = Case {
        id: "k_invariance".into(),
        lhs: Value::Bool(translated.is_ok()),
        rhs: Value::Bool(true),
        equal: translated.is_ok(),
        levels: json!({}),
        extra: translated.as_ref().err().map_or(Value::Null, |e| json!({"error": e.to_string()})),
        status: if translated.is_ok() { Status::Pass } else { Status::Mismatch },
        ms: t1.elapsed().as_millis(),
    };
    let mut cases = vec![count_case, inv_case];
    if let Ok(h) = &translated {
        cases.extend(run_cases(identity_jobs("identity/", h, &grid, qs)));
    }
    Ok(cases)
}
