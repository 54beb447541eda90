//! JSON encodings of exact values, cells, test functions and quadratic spaces.

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ttl_core::{Cell, CycNum, DiscConvention, QuadSpace, Rational, SL2Elt, SchwartzFn};

use crate::TtlError;

pub fn parse_rational(s: &str) -> Result<Rational, TtlError> {
    let s = s.trim();
    let bad = || TtlError::Config(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: BigInt = a.trim().parse().map_err(|_| bad())?;
            let b: BigInt = b.trim().parse().map_err(|_| bad())?;
            if b.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(a, b))
        }
        None => Ok(Rational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

pub fn rational_json(r: &Rational) -> Value {
    Value::String(r.to_string())
}

/// A rational given either as a JSON number (integers only) or a string `"a/b"`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum RationalIn {
    Int(i64),
    Str(String),
}

impl RationalIn {
    pub fn value(&self) -> Result<Rational, TtlError> {
        match self {
            RationalIn::Int(n) => Ok(Rational::from_integer((*n).into())),
            RationalIn::Str(s) => parse_rational(s),
        }
    }
}

/// An integer given as a JSON number or a decimal string.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum IntIn {
    Int(i64),
    Str(String),
}

impl IntIn {
    pub fn value(&self) -> Result<BigInt, TtlError> {
        match self {
            IntIn::Int(n) => Ok((*n).into()),
            IntIn::Str(s) => s.trim().parse().map_err(|_| TtlError::Config(format!("not an integer: {s:?}"))),
        }
    }
}

fn int_json(n: &BigInt) -> Value {
    match i64::try_from(n) {
        Ok(x) => json!(x),
        Err(_) => Value::String(n.to_string()),
    }
}

/// `num/den * zeta_order^exp * sqrt(p)^sqrtp`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TermIn {
    pub order: u64,
    pub exp: i64,
    pub num: IntIn,
    #[serde(default = "one")]
    pub den: IntIn,
    #[serde(default)]
    pub sqrtp: u8,
}

fn one() -> IntIn {
    IntIn::Int(1)
}

/// A plain rational, or `{"terms": [...]}` as written by [`cyc_json`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CycIn {
    Rational(RationalIn),
    Terms {
        terms: Vec<TermIn>,
        #[serde(flatten)]
        _rendering: std::collections::BTreeMap<String, Value>,
    },
}

impl CycIn {
    /// The value, with `p` the prime behind the formal square root.
    pub fn value(&self, p: u64) -> Result<CycNum, TtlError> {
        match self {
            CycIn::Rational(r) => Ok(CycNum::from_rational(r.value()?)),
            CycIn::Terms { terms, .. } => {
                let mut out = CycNum::zero();
                for t in terms {
                    if t.order == 0 {
                        return Err(TtlError::Config("cyclotomic order 0".into()));
                    }
                    let den = t.den.value()?;
                    if den.is_zero() {
                        return Err(TtlError::Config("zero denominator".into()));
                    }
                    let mut x = CycNum::zeta(t.order, t.exp).scale(&Rational::new(t.num.value()?, den));
                    match t.sqrtp {
                        0 => {}
                        1 => x = &x * &CycNum::sqrt_p(p),
                        d => return Err(TtlError::Config(format!("sqrtp degree {d} is not 0 or 1"))),
                    }
                    out = &out + &x;
                }
                Ok(out)
            }
        }
    }
}

/// `{"terms": [{"order", "exp", "num", "den", "sqrtp"}], "float": [re, im], "exact": "..."}`.
pub fn cyc_json(x: &CycNum) -> Value {
    let (re, im) = x.to_float(53);
    let order = x.order();
    let terms: Vec<Value> = x
        .terms()
        .map(|(d, e, c)| {
            json!({"order": order, "exp": e, "num": int_json(c.numer()), "den": int_json(c.denom()), "sqrtp": d})
        })
        .collect();
    json!({"terms": terms, "float": [re, im], "exact": x.to_string()})
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CellIn {
    pub center: Vec<RationalIn>,
    pub level: i64,
    pub coeff: CycIn,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SchwartzIn {
    #[serde(default)]
    pub n: Option<usize>,
    pub cells: Vec<CellIn>,
}

impl SchwartzIn {
    /// Builds the function; the cells must be pairwise disjoint.
    pub fn build(&self, n: usize, p: u64) -> Result<SchwartzFn, TtlError> {
        if self.n.is_some_and(|m| m != n) {
            return Err(TtlError::Config(format!("function of dimension {:?} on a space of dimension {n}", self.n)));
        }
        let mut terms = std::collections::BTreeMap::new();
        for c in &self.cells {
            if c.center.len() != n {
                return Err(TtlError::Config(format!("cell center has {} coordinates, expected {n}", c.center.len())));
            }
            let center = c.center.iter().map(|x| x.value()).collect::<Result<Vec<_>, _>>()?;
            let cell = Cell::new(&center, c.level, p);
            if terms.insert(cell, c.coeff.value(p)?).is_some() {
                return Err(TtlError::Config("repeated cell".into()));
            }
        }
        SchwartzFn::from_disjoint(n, p, terms).map_err(TtlError::Core)
    }
}

pub fn schwartz_json(f: &SchwartzFn) -> Value {
    let p = f.p();
    let cells: Vec<Value> = f
        .cells()
        .map(|(c, x)| {
            let center: Vec<Value> = c.center(p).iter().map(rational_json).collect();
            json!({"center": center, "level": c.level(), "coeff": cyc_json(x)})
        })
        .collect();
    json!({"n": f.dim(), "cells": cells})
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ConventionIn {
    #[default]
    HalfGramDet,
    GramDet,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuadSpaceIn {
    pub p: u64,
    pub gram: Vec<Vec<i64>>,
    pub v1: Vec<i64>,
    #[serde(default)]
    pub convention: ConventionIn,
    #[serde(default)]
    pub witt_hint: Option<String>,
}

impl QuadSpaceIn {
    pub fn build(&self) -> Result<QuadSpace, TtlError> {
        let conv = match self.convention {
            ConventionIn::HalfGramDet => DiscConvention::HalfGramDet,
            ConventionIn::GramDet => DiscConvention::GramDet,
        };
        let qs = QuadSpace::with_convention(self.gram.clone(), self.v1.clone(), self.p, conv).map_err(TtlError::Core)?;
        Ok(match &self.witt_hint {
            Some(h) => qs.with_witt_hint(h),
            None => qs,
        })
    }
}

pub fn quadspace_json(qs: &QuadSpace) -> Value {
    json!({
        "p": qs.p(),
        "gram": qs.gram(),
        "v1": qs.v1(),
        "disc": qs.disc().to_string(),
        "m_max": qs.m_max(),
    })
}


pub fn sl2_json(g: &SL2Elt) -> Value {
    let [a, b, c, d] = g.entries();
    json!({"a": a.to_string(), "b": b.to_string(), "c": c.to_string(), "d": d.to_string()})
}
