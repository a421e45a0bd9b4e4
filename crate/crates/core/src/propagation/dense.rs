use std::ops::{Index, IndexMut};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::error::{dim_mismatch, Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "dense matrix must have positive dimensions, got {n_rows}x{n_cols}"
            )));
        }
        if values.len() != n_rows * n_cols {
            return Err(dim_mismatch(
                "value count vs rows*cols",
                values.len(),
                n_rows * n_cols,
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self::new(n_rows, n_cols, vec![0.0; n_rows * n_cols]).expect("positive dimensions")
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != n_cols) {
            return Err(dim_mismatch("row length", r.len(), n_cols));
        }
        Self::new(rows.len(), n_cols, rows.concat())
    }

    /// Entries uniform in `[-1, 1)`.
    pub fn random(n_rows: usize, n_cols: usize, rng: &mut impl Rng) -> Self {
        let values = (0..n_rows * n_cols)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        Self::new(n_rows, n_cols, values).expect("positive dimensions")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(dim_mismatch(
                "left cols vs right rows",
                self.n_cols,
                other.n_rows,
            ));
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                for j in 0..other.n_cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Every entry stored, zeros included.
    pub fn to_csr(&self) -> CsrMatrix {
        let row_ptr = (0..=self.n_rows).map(|i| i * self.n_cols).collect();
        let col_idx = (0..self.n_rows).flat_map(|_| 0..self.n_cols).collect();
        CsrMatrix::try_from_parts(
            self.n_rows,
            self.n_cols,
            row_ptr,
            col_idx,
            self.values.clone(),
        )
        .expect("full pattern is canonical")
    }

    pub fn from_csr(m: &CsrMatrix) -> Result<Self> {
        let mut values = vec![0.0; m.n_rows() * m.n_cols()];
        for i in 0..m.n_rows() {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                values[i * m.n_cols() + j] = v;
            }
        }
        Self::new(m.n_rows(), m.n_cols(), values)
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.values[i * self.n_cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.values[i * self.n_cols + j]
    }
}

/// Sparse times dense.
pub fn csr_times_dense(a: &CsrMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if a.n_cols() != x.n_rows() {
        return Err(dim_mismatch(
            "sparse cols vs dense rows",
            a.n_cols(),
            x.n_rows(),
        ));
    }
    let f = x.n_cols();
    let mut values = vec![0.0; a.n_rows() * f];
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        let out = &mut values[i * f..(i + 1) * f];
        for (&k, &v) in cols.iter().zip(vals) {
            for (o, &xv) in out.iter_mut().zip(x.row(k)) {
                *o += v * xv;
            }
        }
    }
    DenseMatrix::new(a.n_rows(), f, values)
}
