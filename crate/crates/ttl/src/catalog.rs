//! Split-plus-diagonal Gram matrices: hyperbolic planes `H` followed by a
//! diagonal block, with `v1 = e1 + e2` in the first plane (`q(v1) = 1`).

use ttl_core::padic::nonresidue;
use ttl_core::QuadSpace;

use crate::TtlError;

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: String,
    pub qs: QuadSpace,
}

/// Gram matrix of `H^planes + <2 d_1, ..., 2 d_k>`, so that `q = sum x_i y_i + sum d_j z_j^2`.
pub fn split_plus_diagonal(planes: usize, diag: &[i64]) -> Vec<Vec<i64>> {
    let n = 2 * planes + diag.len();
    let mut g = vec![vec![0i64; n]; n];
    for i in 0..planes {
        g[2 * i][2 * i + 1] = 1;
        g[2 * i + 1][2 * i] = 1;
    }
    for (j, d) in diag.iter().enumerate() {
        let k = 2 * planes + j;
        g[k][k] = 2 * d;
    }
    g
}

fn entry(name: &str, planes: usize, diag: &[i64], p: u64) -> Result<CatalogEntry, TtlError> {
    let g = split_plus_diagonal(planes, diag);
    let mut v1 = vec![0i64; g.len()];
    v1[0] = 1;
    v1[1] = 1;
    let qs = QuadSpace::new(g, v1, p).map_err(TtlError::Core)?;
    Ok(CatalogEntry { name: name.into(), qs })
}

/// Catalog forms of dimension `dim` (3 to 6) at `p`.
pub fn catalog(dim: usize, p: u64) -> Result<Vec<CatalogEntry>, TtlError> {
    let u = nonresidue(p) as i64;
    match dim {
        3 => Ok(vec![entry("H+<1>", 1, &[1], p)?, entry("H+<u>", 1, &[u], p)?]),
        4 => Ok(vec![entry("H+H", 2, &[], p)?, entry("H+<1,-u>", 1, &[1, -u], p)?]),
        5 => Ok(vec![entry("H+H+<1>", 2, &[1], p)?, entry("H+H+<u>", 2, &[u], p)?]),
        6 => Ok(vec![entry("H+H+H", 3, &[], p)?, entry("H+H+<1,-u>", 2, &[1, -u], p)?]),
        _ => Err(TtlError::Config(format!("no catalog forms in dimension {dim}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ttl_core::padic::int;

    #[test]
    fn catalog_forms_are_valid() {
        for p in [3, 5, 7] {
            for dim in 3..=6 {
                for e in catalog(dim, p).unwrap() {
                    assert_eq!(e.qs.n(), dim);
                    assert_eq!(e.qs.q(&e.qs.v1_rational()), int(1));
                }
            }
        }
    }
}
