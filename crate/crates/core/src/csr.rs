//! Compressed sparse row storage.
//!
//! A [`CsrMatrix`] is always canonical once constructed through the public
//! API: row pointers start at zero and never decrease, column indices are in
//! range and strictly increasing within each row. Stored entries whose value
//! is exactly zero are legal and are kept (see [`crate::engine`]).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One `(row, col, value)` entry used while assembling a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triplet {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Triplet {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Self { row, col, value }
    }
}

impl From<(usize, usize, f64)> for Triplet {
    fn from((row, col, value): (usize, usize, f64)) -> Self {
        Self { row, col, value }
    }
}

/// What to do when the same `(row, col)` appears more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Sum,
    Error,
}

/// A broken CSR invariant, as reported by [`validate_parts`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RowPtrLength { expected: usize, actual: usize },
    RowPtrStart { value: usize },
    NonMonotoneRowPtr { at: usize },
    RowPtrEnd { value: usize, nnz: usize },
    ArrayLengthMismatch { col_idx: usize, values: usize },
    IndexOutOfRange { row: usize, col: usize },
    UnsortedRow { row: usize },
    DuplicateEntry { row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowPtrLength { expected, actual } => {
                write!(f, "row_ptr has length {actual}, expected {expected}")
            }
            Violation::RowPtrStart { value } => write!(f, "row_ptr[0] is {value}, expected 0"),
            Violation::NonMonotoneRowPtr { at } => write!(f, "non-monotone row_ptr at {at}"),
            Violation::RowPtrEnd { value, nnz } => {
                write!(f, "row_ptr ends at {value} but nnz is {nnz}")
            }
            Violation::ArrayLengthMismatch { col_idx, values } => {
                write!(f, "col_idx has {col_idx} entries but values has {values}")
            }
            Violation::IndexOutOfRange { row, col } => {
                write!(f, "index out of range: column {col} in row {row}")
            }
            Violation::UnsortedRow { row } => write!(f, "columns not increasing in row {row}"),
            Violation::DuplicateEntry { row, col } => {
                write!(f, "duplicate entry ({row}, {col})")
            }
        }
    }
}

/// Checks every CSR invariant on raw parts and returns the violations found.
///
/// An empty list means the parts form a canonical matrix. Row-level checks are
/// skipped when the row pointer array itself is unusable.
pub fn validate_parts(
    n_rows: usize,
    n_cols: usize,
    row_ptr: &[usize],
    col_idx: &[usize],
    values: &[f64],
) -> Vec<Violation> {
    let mut out = Vec::new();
    if row_ptr.len() != n_rows + 1 {
        out.push(Violation::RowPtrLength {
            expected: n_rows + 1,
            actual: row_ptr.len(),
        });
    }
    if col_idx.len() != values.len() {
        out.push(Violation::ArrayLengthMismatch {
            col_idx: col_idx.len(),
            values: values.len(),
        });
    }
    if let Some(&first) = row_ptr.first() {
        if first != 0 {
            out.push(Violation::RowPtrStart { value: first });
        }
    }
    let mut monotone = true;
    for (i, w) in row_ptr.windows(2).enumerate() {
        if w[1] < w[0] {
            out.push(Violation::NonMonotoneRowPtr { at: i + 1 });
            monotone = false;
        }
    }
    if let Some(&last) = row_ptr.last() {
        if last != col_idx.len() {
            out.push(Violation::RowPtrEnd {
                value: last,
                nnz: col_idx.len(),
            });
        }
    }
    for (pos, &c) in col_idx.iter().enumerate() {
        if c >= n_cols {
            let row = if monotone {
                row_ptr.partition_point(|&p| p <= pos).saturating_sub(1)
            } else {
                usize::MAX
            };
            out.push(Violation::IndexOutOfRange { row, col: c });
        }
    }
    if monotone && row_ptr.len() == n_rows + 1 && row_ptr.last() == Some(&col_idx.len()) {
        for row in 0..n_rows {
            let cols = &col_idx[row_ptr[row]..row_ptr[row + 1]];
            for w in cols.windows(2) {
                if w[1] == w[0] {
                    out.push(Violation::DuplicateEntry { row, col: w[0] });
                } else if w[1] < w[0] {
                    out.push(Violation::UnsortedRow { row });
                    break;
                }
            }
        }
    }
    out
}

/// Compressed sparse row matrix with 64-bit real values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw arrays, rejecting anything non-canonical.
    pub fn try_from_parts(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let violations = validate_parts(n_rows, n_cols, &row_ptr, &col_idx, &values);
        if let Some(v) = violations.first() {
            return Err(Error::InvalidMatrix(v.to_string()));
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Caller guarantees the parts are canonical; checked in debug builds.
    pub(crate) fn from_parts_unchecked(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert!(
            validate_parts(n_rows, n_cols, &row_ptr, &col_idx, &values).is_empty(),
            "non-canonical CSR parts"
        );
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Assembles a canonical matrix from unordered triplets.
    ///
    /// Duplicates are summed after sorting by value, so the result does not
    /// depend on the order of `entries`.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        entries: &[Triplet],
        policy: DuplicatePolicy,
    ) -> Result<Self> {
        for t in entries {
            if t.row >= n_rows || t.col >= n_cols {
                return Err(Error::IndexOutOfRange {
                    row: t.row,
                    col: t.col,
                    n_rows,
                    n_cols,
                });
            }
        }
        // counting sort by row
        let mut counts = vec![0usize; n_rows + 1];
        for t in entries {
            counts[t.row + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut staged = vec![(0usize, 0.0f64); entries.len()];
        for t in entries {
            staged[next[t.row]] = (t.col, t.value);
            next[t.row] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        row_ptr.push(0);
        for row in 0..n_rows {
            let seg = &mut staged[counts[row]..counts[row + 1]];
            seg.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let mut k = 0;
            while k < seg.len() {
                let col = seg[k].0;
                let mut sum = seg[k].1;
                let mut end = k + 1;
                while end < seg.len() && seg[end].0 == col {
                    if policy == DuplicatePolicy::Error {
                        return Err(Error::DuplicateEntry { row, col });
                    }
                    sum += seg[end].1;
                    end += 1;
                }
                col_idx.push(col);
                values.push(sum);
                k = end;
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self::from_parts_unchecked(
            n_rows, n_cols, row_ptr, col_idx, values,
        ))
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row_len(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    /// Column indices and values of one row.
    pub fn row(&self, row: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Looks up a stored entry.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let (cols, vals) = self.row(row);
        cols.binary_search(&col).ok().map(|k| vals[k])
    }

    /// Re-validates the stored arrays.
    pub fn validate(&self) -> Vec<Violation> {
        validate_parts(
            self.n_rows,
            self.n_cols,
            &self.row_ptr,
            &self.col_idx,
            &self.values,
        )
    }

    pub fn to_triplets(&self) -> Vec<Triplet> {
        let mut out = Vec::with_capacity(self.nnz());
        for row in 0..self.n_rows {
            let (cols, vals) = self.row(row);
            out.extend(
                cols.iter()
                    .zip(vals)
                    .map(|(&c, &v)| Triplet::new(row, c, v)),
            );
        }
        out
    }

    pub fn into_parts(self) -> (usize, usize, Vec<usize>, Vec<usize>, Vec<f64>) {
        (
            self.n_rows,
            self.n_cols,
            self.row_ptr,
            self.col_idx,
            self.values,
        )
    }

    /// Applies `f` to every stored value; structure is untouched.
    pub fn map_values(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Transpose by counting sort over columns. Stable, so the output rows are
    /// already sorted and `transpose(transpose(a)) == a` bit for bit.
    pub fn transpose(&self) -> Self {
        let mut row_ptr = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            row_ptr[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0f64; self.nnz()];
        for row in 0..self.n_rows {
            let (cols, vals) = self.row(row);
            for (&c, &v) in cols.iter().zip(vals) {
                let dst = next[c];
                col_idx[dst] = row;
                values[dst] = v;
                next[c] += 1;
            }
        }
        Self::from_parts_unchecked(self.n_cols, self.n_rows, row_ptr, col_idx, values)
    }

    /// Keeps only the entries for which `keep(row, col, value)` holds.
    pub fn filter(&self, mut keep: impl FnMut(usize, usize, f64) -> bool) -> Self {
        let mut row_ptr = Vec::with_capacity(self.n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in 0..self.n_rows {
            let (cols, vals) = self.row(row);
            for (&c, &v) in cols.iter().zip(vals) {
                if keep(row, c, v) {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_parts_unchecked(self.n_rows, self.n_cols, row_ptr, col_idx, values)
    }

    /// Square sub-matrix induced by rows and columns `0..n`.
    pub fn leading_submatrix(&self, n: usize) -> Self {
        let n_rows = n.min(self.n_rows);
        let n_cols = n.min(self.n_cols);
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in 0..n_rows {
            let (cols, vals) = self.row(row);
            let end = cols.partition_point(|&c| c < n_cols);
            col_idx.extend_from_slice(&cols[..end]);
            values.extend_from_slice(&vals[..end]);
            row_ptr.push(col_idx.len());
        }
        Self::from_parts_unchecked(n_rows, n_cols, row_ptr, col_idx, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn a3() -> CsrMatrix {
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
    fn builds_a3_from_triplets() {
        let a = a3();
        assert_eq!(a.row_ptr(), &[0, 2, 3, 5]);
        assert_eq!(a.col_idx(), &[0, 2, 1, 0, 2]);
        assert_eq!(a.values(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        // re-expansion gives back the input entries
        let back: Vec<_> = a
            .to_triplets()
            .into_iter()
            .map(|t| (t.row, t.col, t.value))
            .collect();
        assert_eq!(
            back,
            vec![
                (0, 0, 1.0),
                (0, 2, 2.0),
                (1, 1, 3.0),
                (2, 0, 4.0),
                (2, 2, 5.0)
            ]
        );
    }

    #[test]
    fn empty_triplets() {
        let m = CsrMatrix::from_triplets(2, 2, &[], DuplicatePolicy::Sum).unwrap();
        assert_eq!(m.row_ptr(), &[0, 0, 0]);
        assert!(m.col_idx().is_empty());
        assert!(m.values().is_empty());
    }

    #[test]
    fn duplicates_sum_or_error() {
        let t = [Triplet::new(0, 0, 1.0), Triplet::new(0, 0, 2.0)];
        let m = CsrMatrix::from_triplets(1, 1, &t, DuplicatePolicy::Sum).unwrap();
        assert_eq!(m.values(), &[3.0]);
        let err = CsrMatrix::from_triplets(1, 1, &t, DuplicatePolicy::Error).unwrap_err();
        assert!(matches!(err, Error::DuplicateEntry { row: 0, col: 0 }));
    }

    #[test]
    fn out_of_range_triplet() {
        let t = [Triplet::new(0, 3, 1.0)];
        let err = CsrMatrix::from_triplets(2, 3, &t, DuplicatePolicy::Sum).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { col: 3, .. }));
    }

    #[test]
    fn transpose_examples() {
        let t = a3().transpose();
        assert_eq!(t.row_ptr(), &[0, 2, 3, 5]);
        assert_eq!(t.col_idx(), &[0, 2, 1, 0, 2]);
        assert_eq!(t.values(), &[1.0, 4.0, 3.0, 2.0, 5.0]);
        assert_eq!(CsrMatrix::identity(4).transpose(), CsrMatrix::identity(4));
        let e = CsrMatrix::zeros(2, 3).transpose();
        assert_eq!((e.n_rows(), e.n_cols(), e.nnz()), (3, 2, 0));
    }

    #[test]
    fn validate_reports_rules() {
        assert!(a3().validate().is_empty());
        let v = validate_parts(2, 2, &[0, 2, 1], &[0], &[1.0]);
        assert!(v.contains(&Violation::NonMonotoneRowPtr { at: 2 }));
        assert_eq!(
            v.iter()
                .find(|v| matches!(v, Violation::NonMonotoneRowPtr { .. }))
                .unwrap()
                .to_string(),
            "non-monotone row_ptr at 2"
        );
        let v = validate_parts(1, 2, &[0, 1], &[2], &[1.0]);
        assert_eq!(v, vec![Violation::IndexOutOfRange { row: 0, col: 2 }]);
        let v = validate_parts(1, 3, &[0, 2], &[1, 1], &[1.0, 1.0]);
        assert_eq!(v, vec![Violation::DuplicateEntry { row: 0, col: 1 }]);
        let v = validate_parts(1, 3, &[0, 2], &[2, 1], &[1.0, 1.0]);
        assert_eq!(v, vec![Violation::UnsortedRow { row: 0 }]);
        assert!(CsrMatrix::try_from_parts(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn leading_submatrix_and_filter() {
        let s = a3().leading_submatrix(2);
        assert_eq!(s.row_ptr(), &[0, 1, 2]);
        assert_eq!(s.col_idx(), &[0, 1]);
        let f = a3().filter(|r, c, _| r != c);
        assert_eq!(f.col_idx(), &[2, 0]);
    }
}
