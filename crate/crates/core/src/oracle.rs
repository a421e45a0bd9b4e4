//! Reference SpGEMM used to check the engine.
//!
//! Deliberately simple: every row's products are materialised, stably sorted
//! by column and merged. It shares no code with [`crate::engine`].

use crate::csr::CsrMatrix;
use crate::error::{dim_mismatch, Result};

/// Exact row-wise product `a * b`.
///
/// Every column key reached by some product is stored, even when the sum is
/// exactly zero. Per column, products are added in ascending order of the
/// contributing column of `a`.
pub fn oracle_spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
    if a.n_cols() != b.n_rows() {
        return Err(dim_mismatch("a.n_cols vs b.n_rows", a.n_cols(), b.n_rows()));
    }
    let mut row_ptr = Vec::with_capacity(a.n_rows() + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    let mut products: Vec<(usize, f64)> = Vec::new();
    for i in 0..a.n_rows() {
        products.clear();
        let (a_cols, a_vals) = a.row(i);
        for (&k, &av) in a_cols.iter().zip(a_vals) {
            let (b_cols, b_vals) = b.row(k);
            products.extend(b_cols.iter().zip(b_vals).map(|(&j, &bv)| (j, av * bv)));
        }
        products.sort_by_key(|p| p.0);
        let mut iter = products.iter().peekable();
        while let Some(&(col, v)) = iter.next() {
            let mut sum = v;
            while let Some(&&(next_col, nv)) = iter.peek() {
                if next_col != col {
                    break;
                }
                sum += nv;
                iter.next();
            }
            col_idx.push(col);
            values.push(sum);
        }
        row_ptr.push(col_idx.len());
    }
    Ok(CsrMatrix::from_parts_unchecked(
        a.n_rows(),
        b.n_cols(),
        row_ptr,
        col_idx,
        values,
    ))
}

/// Outcome of comparing a computed product against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub structure_equal: bool,
    pub max_rel_error: f64,
}

impl Comparison {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.structure_equal && self.max_rel_error <= rel_tol
    }
}

/// Compares structure exactly and values by relative error.
///
/// The relative error of an entry is `|x - y| / max(|x|, |y|)`, taken as 0 when
/// both are exactly equal (including two zeros).
pub fn compare(actual: &CsrMatrix, expected: &CsrMatrix) -> Comparison {
    let structure_equal = actual.n_rows() == expected.n_rows()
        && actual.n_cols() == expected.n_cols()
        && actual.row_ptr() == expected.row_ptr()
        && actual.col_idx() == expected.col_idx();
    if !structure_equal {
        return Comparison {
            structure_equal,
            max_rel_error: f64::INFINITY,
        };
    }
    let max_rel_error = actual
        .values()
        .iter()
        .zip(expected.values())
        .map(|(&x, &y)| rel_error(x, y))
        .fold(0.0, f64::max);
    Comparison {
        structure_equal,
        max_rel_error,
    }
}

pub fn rel_error(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        (x - y).abs() / x.abs().max(y.abs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csr::{DuplicatePolicy, Triplet};

    fn a3() -> CsrMatrix {
        let t: Vec<Triplet> = [
            (0, 0, 1.0),
            (0, 2, 2.0),
            (1, 1, 3.0),
            (2, 0, 4.0),
            (2, 2, 5.0),
        ]
        .into_iter()
        .map(Triplet::from)
        .collect();
        CsrMatrix::from_triplets(3, 3, &t, DuplicatePolicy::Sum).unwrap()
    }

    #[test]
    fn a3_squared() {
        let c = oracle_spgemm(&a3(), &a3()).unwrap();
        assert_eq!(c.row_ptr(), &[0, 2, 3, 5]);
        assert_eq!(c.col_idx(), &[0, 2, 1, 0, 2]);
        assert_eq!(c.values(), &[9.0, 12.0, 9.0, 24.0, 33.0]);
    }

    #[test]
    fn identity_and_empty() {
        let a = a3();
        assert_eq!(oracle_spgemm(&CsrMatrix::identity(3), &a).unwrap(), a);
        assert_eq!(oracle_spgemm(&a, &CsrMatrix::identity(3)).unwrap(), a);
        let z = oracle_spgemm(&a, &CsrMatrix::zeros(3, 0)).unwrap();
        assert_eq!((z.n_rows(), z.n_cols(), z.nnz()), (3, 0, 0));
        assert!(oracle_spgemm(&a, &CsrMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn cancellation_is_stored() {
        let a = CsrMatrix::from_triplets(
            1,
            2,
            &[Triplet::new(0, 0, 1.0), Triplet::new(0, 1, -1.0)],
            DuplicatePolicy::Sum,
        )
        .unwrap();
        let b = CsrMatrix::from_triplets(
            2,
            1,
            &[Triplet::new(0, 0, 2.0), Triplet::new(1, 0, 2.0)],
            DuplicatePolicy::Sum,
        )
        .unwrap();
        let c = oracle_spgemm(&a, &b).unwrap();
        assert_eq!(c.nnz(), 1);
        assert_eq!(c.values(), &[0.0]);
    }
}
