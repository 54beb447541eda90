//! Exact p-adic harmonic analysis for the rank-one theta transfer between the
//! Whittaker variety of `SL2` and the hyperboloid `X_1 = {q = 1}` of a quadratic
//! space over `Q_p` (`p` odd).
//!
//! Everything is exact: scalars live in cyclotomic fields extended by a formal
//! `sqrt(p)` ([`CycNum`]), test functions are finite sums of coset indicators
//! ([`SchwartzFn`]), and integrals over hyperboloids are evaluated through
//! Hensel-certified local densities.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and the
//! random test-function generator live in the `ttl` crate.

#![no_std]

extern crate alloc;

mod density;
pub mod error;
pub mod exactnum;
pub mod lfactor;
pub mod padic;
pub mod quadspace;
pub mod schwartz;
pub mod transfer;
pub mod weil;

pub use error::{Error, Result};
pub use exactnum::{CycNum, CycSum};
pub use lfactor::{LFactorValue, MetaplecticConvention, SatakeData};
pub use padic::{PadicScalar, Rational};
pub use quadspace::{DensityResult, DiscConvention, FiberVerdict, QuadSpace};
pub use schwartz::{Cell, SchwartzFn};
pub use transfer::{WhittakerTestFn, XTestFn};
pub use weil::{Bruhat, SL2Elt};
