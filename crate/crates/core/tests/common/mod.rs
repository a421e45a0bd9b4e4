#![allow(dead_code)]

use proptest::prelude::*;
use spgemm_core::{CsrMatrix, DuplicatePolicy, Triplet};

/// Random CSR with dimensions up to `max_dim` and density up to 40%.
pub fn csr(max_dim: usize) -> impl Strategy<Value = CsrMatrix> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| csr_with_dims(r, c))
}

pub fn square_csr(max_dim: usize) -> impl Strategy<Value = CsrMatrix> {
    (1..=max_dim).prop_flat_map(|n| csr_with_dims(n, n))
}

pub fn csr_with_dims(rows: usize, cols: usize) -> impl Strategy<Value = CsrMatrix> {
    let max_entries = (rows * cols * 2 / 5).max(1);
    proptest::collection::vec((0..rows, 0..cols, -4i32..=4), 0..=max_entries).prop_map(
        move |entries| {
            let t: Vec<Triplet> = entries
                .into_iter()
                .map(|(i, j, v)| Triplet::from((i, j, v as f64 * 0.5)))
                .collect();
            CsrMatrix::from_triplets(rows, cols, &t, DuplicatePolicy::Sum).unwrap()
        },
    )
}

/// A pair `(A, B)` with `A.n_cols == B.n_rows`.
pub fn compatible_pair(max_dim: usize) -> impl Strategy<Value = (CsrMatrix, CsrMatrix)> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim)
        .prop_flat_map(|(m, k, n)| (csr_with_dims(m, k), csr_with_dims(k, n)))
}

/// Dense reference product.
pub fn dense_product(a: &CsrMatrix, b: &CsrMatrix) -> Vec<Vec<f64>> {
    let da = to_dense(a);
    let db = to_dense(b);
    let mut c = vec![vec![0.0; b.n_cols()]; a.n_rows()];
    for i in 0..a.n_rows() {
        for k in 0..a.n_cols() {
            for j in 0..b.n_cols() {
                c[i][j] += da[i][k] * db[k][j];
            }
        }
    }
    c
}

pub fn to_dense(m: &CsrMatrix) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; m.n_cols()]; m.n_rows()];
    for i in 0..m.n_rows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            d[i][j] += v;
        }
    }
    d
}

/// Random CSR with at most `density * rows * cols` entries (before merging
/// duplicates) and arbitrary signed values.
pub fn sparse_with_dims(
    rows: usize,
    cols: usize,
    density: f64,
) -> impl Strategy<Value = CsrMatrix> {
    let max_entries = ((rows * cols) as f64 * density) as usize;
    proptest::collection::vec((0..rows, 0..cols, -1.0e3f64..1.0e3), 0..=max_entries).prop_map(
        move |entries| {
            let t: Vec<Triplet> = entries.into_iter().map(Triplet::from).collect();
            CsrMatrix::from_triplets(rows, cols, &t, DuplicatePolicy::Sum).unwrap()
        },
    )
}

pub fn sparse_pair(max_dim: usize, density: f64) -> impl Strategy<Value = (CsrMatrix, CsrMatrix)> {
    (1..=max_dim, 1..=max_dim, 1..=max_dim).prop_flat_map(move |(m, k, n)| {
        (
            sparse_with_dims(m, k, density),
            sparse_with_dims(k, n, density),
        )
    })
}

/// Per-entry relative agreement with a dense result, and exact structure:
/// every stored entry is a position some product touched.
pub fn assert_matches_dense(c: &CsrMatrix, dense: &[Vec<f64>], tol: f64) {
    for (i, row) in dense.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            let got = c.get(i, j).unwrap_or(0.0);
            let scale = want.abs().max(got.abs());
            assert!(
                got == want || (got - want).abs() <= tol * scale.max(1e-300) || scale < 1e-9,
                "({i},{j}): {got} vs {want}"
            );
        }
    }
}
