use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::engine::Engine;
use crate::error::{dim_mismatch, Error, Result};

/// 1-based node labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    max: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let max = labels.iter().copied().max().unwrap_or(0);
        if let Some(node) = labels.iter().position(|&l| l == 0) {
            return Err(Error::LabelOutOfRange {
                node,
                label: 0,
                max,
            });
        }
        Ok(Self { labels, max })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of groups `m`, the largest label.
    pub fn max_label(&self) -> usize {
        self.max
    }

    /// Reads whitespace-separated labels; `%` and `#` start comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut labels = Vec::new();
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            let body = line.split(['%', '#']).next().unwrap_or("");
            for tok in body.split_whitespace() {
                let label = tok.parse::<usize>().map_err(|e| Error::Parse {
                    line: no + 1,
                    msg: format!("bad label {tok:?}: {e}"),
                })?;
                labels.push(label);
            }
        }
        Self::new(labels)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// `m x n` selector with a one at `(labels[j] - 1, j)`.
pub fn build_selector(labels: &LabelVector, n: usize) -> Result<CsrMatrix> {
    if labels.len() != n {
        return Err(dim_mismatch("label count vs node count", labels.len(), n));
    }
    let m = labels.max_label();
    let mut row_ptr = vec![0usize; m + 1];
    for &l in labels.labels() {
        row_ptr[l] += 1;
    }
    for i in 0..m {
        row_ptr[i + 1] += row_ptr[i];
    }
    let mut next = row_ptr.clone();
    let mut col_idx = vec![0usize; n];
    for (j, &l) in labels.labels().iter().enumerate() {
        col_idx[next[l - 1]] = j;
        next[l - 1] += 1;
    }
    CsrMatrix::try_from_parts(m, n, row_ptr, col_idx, vec![1.0; n])
}

/// `S * G * Sᵀ`, merging nodes with equal labels.
pub fn graph_contract(g: &CsrMatrix, labels: &LabelVector, engine: &Engine) -> Result<CsrMatrix> {
    if !g.is_square() {
        return Err(Error::NotSquare {
            n_rows: g.n_rows(),
            n_cols: g.n_cols(),
        });
    }
    let s = build_selector(labels, g.n_rows())?;
    let sg = engine.product(&s, g)?;
    engine.product(&sg, &s.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SpgemmConfig;

    fn labels(v: &[usize]) -> LabelVector {
        LabelVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn selector_examples() {
        let s = build_selector(&labels(&[1, 1, 2]), 3).unwrap();
        assert_eq!((s.n_rows(), s.n_cols()), (2, 3));
        assert_eq!(s.row_ptr(), &[0, 2, 3]);
        assert_eq!(s.col_idx(), &[0, 1, 2]);
        assert_eq!(
            build_selector(&labels(&[1, 2, 3]), 3).unwrap(),
            CsrMatrix::identity(3)
        );
        assert_eq!(build_selector(&labels(&[1, 1]), 2).unwrap().row_len(0), 2);
    }

    #[test]
    fn gaps_in_labels_leave_empty_rows() {
        let s = build_selector(&labels(&[3, 1]), 2).unwrap();
        assert_eq!(s.row_ptr(), &[0, 1, 1, 2]);
    }

    #[test]
    fn label_errors() {
        assert!(matches!(
            LabelVector::new(vec![1, 0, 2]),
            Err(Error::LabelOutOfRange {
                node: 1,
                label: 0,
                max: 2
            })
        ));
        assert!(build_selector(&labels(&[1]), 2).is_err());
        let e = Engine::new(SpgemmConfig::default().with_workers(1)).unwrap();
        assert!(matches!(
            graph_contract(&CsrMatrix::zeros(1, 2), &labels(&[1]), &e),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn reads_label_file() {
        let text = "% labels\n1 1\n2 # last\n";
        assert_eq!(
            LabelVector::read(text.as_bytes()).unwrap(),
            labels(&[1, 1, 2])
        );
        assert!(matches!(
            LabelVector::read("1 x".as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
