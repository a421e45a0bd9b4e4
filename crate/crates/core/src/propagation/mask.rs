use serde::{Deserialize, Serialize};

use super::dense::DenseMatrix;
use crate::csr::CsrMatrix;
use crate::error::{dim_mismatch, Result};

/// Binary selection mask over a dense matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopKMask {
    n_rows: usize,
    n_cols: usize,
    k: usize,
    global: bool,
    bits: Vec<bool>,
}

impl TopKMask {
    /// Keeps the `k` largest entries of each row; equal values favour the
    /// smaller column.
    pub fn per_row(x: &DenseMatrix, k: usize) -> Self {
        let (n, f) = (x.n_rows(), x.n_cols());
        let mut bits = vec![false; n * f];
        let mut order: Vec<usize> = Vec::with_capacity(f);
        for i in 0..n {
            let row = x.row(i);
            order.clear();
            order.extend(0..f);
            order.sort_by(|&a, &b| row[b].total_cmp(&row[a]));
            for &j in order.iter().take(k) {
                bits[i * f + j] = true;
            }
        }
        Self {
            n_rows: n,
            n_cols: f,
            k,
            global: false,
            bits,
        }
    }

    /// Keeps the `n_rows * k` largest entries of the whole matrix; equal
    /// values favour the earlier row-major position.
    pub fn global(x: &DenseMatrix, k: usize) -> Self {
        let v = x.values();
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        let mut bits = vec![false; v.len()];
        for &p in order.iter().take(x.n_rows() * k) {
            bits[p] = true;
        }
        Self {
            n_rows: x.n_rows(),
            n_cols: x.n_cols(),
            k,
            global: true,
            bits,
        }
    }

    pub fn new(x: &DenseMatrix, k: usize, global: bool) -> Self {
        if global {
            Self::global(x, k)
        } else {
            Self::per_row(x, k)
        }
    }

    /// All-ones or all-zeros mask.
    pub fn filled(n_rows: usize, n_cols: usize, on: bool) -> Self {
        Self {
            n_rows,
            n_cols,
            k: if on { n_cols } else { 0 },
            global: false,
            bits: vec![on; n_rows * n_cols],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_global(&self) -> bool {
        self.global
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n_cols + j]
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.bits[i * self.n_cols..(i + 1) * self.n_cols]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    fn check_shape(&self, x: &DenseMatrix) -> Result<()> {
        if (x.n_rows(), x.n_cols()) != (self.n_rows, self.n_cols) {
            return Err(dim_mismatch(
                "mask vs matrix entries",
                self.n_rows * self.n_cols,
                x.n_rows() * x.n_cols(),
            ));
        }
        Ok(())
    }

    /// `x ⊙ mask`, dense.
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_shape(x)?;
        let values = x
            .values()
            .iter()
            .zip(&self.bits)
            .map(|(&v, &b)| if b { v } else { 0.0 })
            .collect();
        DenseMatrix::new(self.n_rows, self.n_cols, values)
    }

    /// Selected entries of `x` as CSR. Selected zeros stay stored.
    pub fn sparsify(&self, x: &DenseMatrix) -> Result<CsrMatrix> {
        self.check_shape(x)?;
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                if self.get(i, j) {
                    col_idx.push(j);
                    values.push(x[(i, j)]);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix::try_from_parts(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> DenseMatrix {
        DenseMatrix::from_rows(&[v.to_vec()]).unwrap()
    }

    fn bits(m: &TopKMask) -> Vec<bool> {
        (0..m.n_cols()).map(|j| m.get(0, j)).collect()
    }

    #[test]
    fn per_row_examples() {
        assert_eq!(
            bits(&TopKMask::per_row(&row(&[3.0, 1.0, 2.0]), 2)),
            [true, false, true]
        );
        assert_eq!(
            bits(&TopKMask::per_row(&row(&[3.0, 1.0, 2.0]), 9)),
            [true; 3]
        );
        assert_eq!(
            bits(&TopKMask::per_row(&row(&[5.0, 5.0, 1.0]), 1)),
            [true, false, false]
        );
    }

    #[test]
    fn global_selection() {
        let x = DenseMatrix::from_rows(&[vec![9.0, 8.0], vec![1.0, 2.0]]).unwrap();
        let m = TopKMask::global(&x, 1);
        assert_eq!((m.row_count(0), m.row_count(1)), (2, 0));
        assert!(m.is_global());
    }

    #[test]
    fn sparsify_keeps_selected_zeros() {
        let x = row(&[0.0, -1.0, -2.0]);
        let m = TopKMask::per_row(&x, 2);
        let c = m.sparsify(&x).unwrap();
        assert_eq!(c.col_idx(), &[0, 1]);
        assert_eq!(c.values(), &[0.0, -1.0]);
        assert_eq!(m.apply(&x).unwrap().values(), &[0.0, -1.0, 0.0]);
        assert!(m.apply(&DenseMatrix::zeros(2, 3)).is_err());
    }
}
