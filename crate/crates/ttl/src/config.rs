//! Job descriptions, read from JSON or TOML.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use ttl_core::lfactor::SatakeParam;
use ttl_core::padic::{int, nonresidue, p_pow};
use ttl_core::transfer::basic_phi;
use ttl_core::{MetaplecticConvention, QuadSpace, Rational, SchwartzFn};

use crate::catalog::catalog;
use crate::random::{generate_random_phi, RandomSpec};
use crate::wire::{QuadSpaceIn, RationalIn, SchwartzIn};
use crate::TtlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyTransfer,
    VerifyFl,
    VerifyWeil,
    Density,
    Lfactor,
    HeckeCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyTransfer => "verify-transfer",
            Command::VerifyFl => "verify-fl",
            Command::VerifyWeil => "verify-weil",
            Command::Density => "density",
            Command::Lfactor => "lfactor",
            Command::HeckeCheck => "hecke-check",
        }
    }
}

/// A catalog form, as an alternative to an explicit `quadspace`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CatalogRef {
    pub dim: usize,
    pub p: u64,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PhiIn {
    /// `"basic"`.
    Named(String),
    Random { random: RandomSpec },
    Explicit(SchwartzIn),
}

impl Default for PhiIn {
    fn default() -> Self {
        PhiIn::Named("basic".into())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AGrid {
    /// `"standard"`: valuations `-2..=2` times the units `1, u`.
    Named(String),
    List(Vec<RationalIn>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaIn {
    Root { order: u64, exp: i64 },
    Float { re: f64, im: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub a: Option<AGrid>,
    #[serde(default)]
    pub xi: Vec<RationalIn>,
    #[serde(default)]
    pub alpha: Vec<AlphaIn>,
    /// Random group element pairs for `verify-weil`.
    #[serde(default)]
    pub pairs: Option<usize>,
    /// Cap on the estimated cell count of each group action.
    #[serde(default)]
    pub cell_budget: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default)]
    pub m_max: Option<i64>,
    /// Largest truncation `N` checked against the direct `b`-cell sum.
    #[serde(default)]
    pub n_max: Option<i64>,
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MetaplecticIn {
    #[default]
    Degree2Shimura,
    SquaredParameter,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub quadspace: Option<QuadSpaceIn>,
    #[serde(default)]
    pub catalog: Option<CatalogRef>,
    #[serde(default)]
    pub phi: PhiIn,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metaplectic: MetaplecticIn,
}

impl JobConfig {
    pub fn from_str_with_format(text: &str, toml_format: bool) -> Result<Self, TtlError> {
        if toml_format {
            toml::from_str(text).map_err(|e| TtlError::Config(format!("TOML: {e}")))
        } else {
            serde_json::from_str(text).map_err(|e| TtlError::Config(format!("JSON: {e}")))
        }
    }

    /// Reads a `.toml` or JSON file.
    pub fn load(path: &Path) -> Result<Self, TtlError> {
        let text = std::fs::read_to_string(path).map_err(|e| TtlError::Config(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::from_str_with_format(&text, is_toml)
    }

    pub fn quadspace(&self) -> Result<QuadSpace, TtlError> {
        let qs = match (&self.quadspace, &self.catalog) {
            (Some(q), None) => q.build()?,
            (None, Some(c)) => {
                let forms = catalog(c.dim, c.p)?;
                let e = match &c.name {
                    Some(n) => forms.into_iter().find(|e| &e.name == n).ok_or_else(|| TtlError::Config(format!("no catalog form {n:?}")))?,
                    None => forms.into_iter().next().unwrap(),
                };
                e.qs
            }
            (Some(_), Some(_)) => return Err(TtlError::Config("give either quadspace or catalog, not both".into())),
            (None, None) => return Err(TtlError::Config("missing quadspace".into())),
        };
        Ok(match self.caps.m_max {
            Some(m) if m < 1 => return Err(TtlError::Config(format!("m_max {m} < 1"))),
            Some(m) => qs.with_m_max(m),
            None => qs,
        })
    }

    /// Test functions named by `phi`, seeded by `seed`.
    pub fn phis(&self, qs: &QuadSpace) -> Result<Vec<SchwartzFn>, TtlError> {
        match &self.phi {
            PhiIn::Named(s) if s == "basic" => Ok(vec![basic_phi(qs)]),
            PhiIn::Named(s) => Err(TtlError::Config(format!("unknown phi {s:?}"))),
            PhiIn::Explicit(f) => Ok(vec![f.build(qs.n(), qs.p())?]),
            PhiIn::Random { random } => (0..random.count)
                .map(|i| {
                    generate_random_phi(
                        self.seed.wrapping_add(i as u64),
                        qs.n(),
                        qs.p(),
                        random.level_range,
                        random.support_radius,
                        random.cells,
                        &random.coeff_pool,
                    )
                })
                .collect(),
        }
    }

    pub fn a_grid(&self, p: u64) -> Result<Vec<Rational>, TtlError> {
        match &self.grid.a {
            None => Ok(vec![int(1)]),
            Some(AGrid::Named(s)) if s == "standard" => Ok(standard_a_grid(p)),
            Some(AGrid::Named(s)) => Err(TtlError::Config(format!("unknown a-grid {s:?}"))),
            Some(AGrid::List(v)) => {
                let out: Vec<Rational> = v.iter().map(|x| x.value()).collect::<Result<_, _>>()?;
                if out.iter().any(|a| a == &int(0)) {
                    return Err(TtlError::Config("a = 0 in grid".into()));
                }
                Ok(out)
            }
        }
    }

    pub fn xi_grid(&self) -> Result<Vec<Rational>, TtlError> {
        self.grid.xi.iter().map(|x| x.value()).collect()
    }

    /// Satake parameters; defaults to `zeta_k` for `k = 1..=20`.
    pub fn alphas(&self) -> Result<Vec<SatakeParam>, TtlError> {
        if self.grid.alpha.is_empty() {
            return Ok((1..=20).map(|k| SatakeParam::Root { order: k, exp: 1 }).collect());
        }
        self.grid
            .alpha
            .iter()
            .map(|a| match a {
                AlphaIn::Root { order: 0, .. } => Err(TtlError::Config("root of unity of order 0".into())),
                AlphaIn::Root { order, exp } => Ok(SatakeParam::Root { order: *order, exp: *exp }),
                AlphaIn::Float { re, im } => Ok(SatakeParam::Float(Complex64::new(*re, *im))),
            })
            .collect()
    }

    pub fn metaplectic(&self) -> MetaplecticConvention {
        match self.metaplectic {
            MetaplecticIn::Degree2Shimura => MetaplecticConvention::Degree2Shimura,
            MetaplecticIn::SquaredParameter => MetaplecticConvention::SquaredParameter,
        }
    }
}

/// `p^v e` for `v` in `-2..=2` and `e` in `{1, u}` with `u` a non-square unit.
pub fn standard_a_grid(p: u64) -> Vec<Rational> {
    let u = int(nonresidue(p) as i64);
    let mut out = Vec::new();
    for v in -2..=2 {
        out.push(p_pow(p, v));
        out.push(p_pow(p, v) * &u);
    }
    out
}
