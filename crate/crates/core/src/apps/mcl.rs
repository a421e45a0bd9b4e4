use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::engine::Engine;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MclParams {
    /// Expansion exponent.
    pub e: u32,
    /// Inflation exponent.
    pub r: f64,
    /// Entries below this are dropped after expansion.
    pub theta: f64,
    /// Entries kept per column; `None` keeps all.
    pub k: Option<usize>,
    pub max_iter: usize,
    pub eps: f64,
}

impl Default for MclParams {
    fn default() -> Self {
        Self {
            e: 2,
            r: 2.0,
            theta: 1e-4,
            k: None,
            max_iter: 100,
            eps: 1e-6,
        }
    }
}

impl MclParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::BadConfig(m.into()));
        if self.e < 2 {
            return bad("expansion exponent must be at least 2");
        }
        if !(self.r > 1.0) {
            return bad("inflation exponent must exceed 1");
        }
        if !(self.theta >= 0.0) {
            return bad("pruning threshold must be non-negative");
        }
        if self.k == Some(0) {
            return bad("top-k must keep at least one entry");
        }
        if !(self.eps > 0.0) {
            return bad("convergence tolerance must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub cluster_of_node: Vec<usize>,
    pub n_clusters: usize,
}

impl ClusterAssignment {
    /// Connected components of the support of `m + mᵀ`, numbered in order of
    /// each component's smallest node.
    pub fn from_components(m: &CsrMatrix) -> Self {
        let n = m.n_rows().max(m.n_cols());
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for i in 0..m.n_rows() {
            let (cols, vals) = m.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if v != 0.0 {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut id_of_root = vec![usize::MAX; n];
        let mut cluster_of_node = Vec::with_capacity(n);
        let mut n_clusters = 0;
        for node in 0..n {
            let root = find(&mut parent, node);
            if id_of_root[root] == usize::MAX {
                id_of_root[root] = n_clusters;
                n_clusters += 1;
            }
            cluster_of_node.push(id_of_root[root]);
        }
        Self {
            cluster_of_node,
            n_clusters,
        }
    }

    /// Nodes of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters];
        for (node, &c) in self.cluster_of_node.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MclOutcome {
    pub clusters: ClusterAssignment,
    pub iterations: usize,
    pub converged: bool,
}

fn check_non_negative(m: &CsrMatrix) -> Result<()> {
    for i in 0..m.n_rows() {
        let (cols, vals) = m.row(i);
        if let Some((&col, &value)) = cols.iter().zip(vals).find(|(_, &v)| v < 0.0) {
            return Err(Error::NegativeEntry { row: i, col, value });
        }
    }
    Ok(())
}

pub fn column_sums(m: &CsrMatrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.n_cols()];
    for (&c, &v) in m.col_idx().iter().zip(m.values()) {
        sums[c] += v;
    }
    sums
}

/// Scales every column with a nonzero sum to sum 1.
pub fn column_normalize(m: &CsrMatrix) -> Result<CsrMatrix> {
    check_non_negative(m)?;
    let sums = column_sums(m);
    let cols = m.col_idx();
    let mut pos = 0;
    Ok(m.map_values(|v| {
        let s = sums[cols[pos]];
        pos += 1;
        if s > 0.0 {
            v / s
        } else {
            v
        }
    }))
}

/// Drops entries below `theta`, then keeps the `k` largest of each column.
/// Equal values favour the smaller row index.
pub fn prune_columns(m: &CsrMatrix, theta: f64, k: Option<usize>) -> CsrMatrix {
    let kept = m.filter(|_, _, v| v >= theta);
    let Some(k) = k else {
        return kept;
    };
    let by_col = kept.transpose();
    let mut row_ptr = vec![0];
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    let mut order = Vec::new();
    for c in 0..by_col.n_rows() {
        let (r, v) = by_col.row(c);
        if r.len() <= k {
            rows.extend_from_slice(r);
            vals.extend_from_slice(v);
        } else {
            order.clear();
            order.extend(0..r.len());
            // stable: equal values stay in row order
            order.sort_by(|&x, &y| v[y].total_cmp(&v[x]));
            order.truncate(k);
            order.sort_unstable();
            rows.extend(order.iter().map(|&p| r[p]));
            vals.extend(order.iter().map(|&p| v[p]));
        }
        row_ptr.push(rows.len());
    }
    CsrMatrix::try_from_parts(by_col.n_rows(), by_col.n_cols(), row_ptr, rows, vals)
        .expect("subset of a canonical matrix")
        .transpose()
}

/// Entrywise power.
pub fn inflate(m: &CsrMatrix, r: f64) -> CsrMatrix {
    m.map_values(|v| v.powf(r))
}

/// Adds a unit self-loop to every node that has none.
pub fn add_self_loops(g: &CsrMatrix) -> CsrMatrix {
    let n = g.n_rows();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(g.nnz() + n);
    let mut values = Vec::with_capacity(g.nnz() + n);
    row_ptr.push(0);
    for i in 0..n {
        let (cols, vals) = g.row(i);
        let at = cols.partition_point(|&c| c < i);
        col_idx.extend_from_slice(&cols[..at]);
        values.extend_from_slice(&vals[..at]);
        if cols.get(at) != Some(&i) {
            col_idx.push(i);
            values.push(1.0);
        }
        col_idx.extend_from_slice(&cols[at..]);
        values.extend_from_slice(&vals[at..]);
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::try_from_parts(n, g.n_cols(), row_ptr, col_idx, values)
        .expect("self loops keep rows sorted")
}

/// Largest absolute entry difference over the union of both supports.
pub fn max_abs_diff(x: &CsrMatrix, y: &CsrMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.n_rows() {
        let (xc, xv) = x.row(i);
        let (yc, yv) = y.row(i);
        let (mut p, mut q) = (0, 0);
        while p < xc.len() || q < yc.len() {
            let d = match (xc.get(p), yc.get(q)) {
                (Some(a), Some(b)) if a == b => {
                    p += 1;
                    q += 1;
                    xv[p - 1] - yv[q - 1]
                }
                (Some(a), Some(b)) if a < b => {
                    p += 1;
                    xv[p - 1]
                }
                (Some(_), None) => {
                    p += 1;
                    xv[p - 1]
                }
                _ => {
                    q += 1;
                    yv[q - 1]
                }
            };
            worst = worst.max(d.abs());
        }
    }
    worst
}

pub fn mcl(g: &CsrMatrix, params: &MclParams, engine: &Engine) -> Result<MclOutcome> {
    mcl_observed(g, params, engine, |_, _| {})
}

/// MCL with a callback receiving `(iteration, matrix)` after each normalize.
pub fn mcl_observed(
    g: &CsrMatrix,
    params: &MclParams,
    engine: &Engine,
    mut observe: impl FnMut(usize, &CsrMatrix),
) -> Result<MclOutcome> {
    if !g.is_square() {
        return Err(Error::NotSquare {
            n_rows: g.n_rows(),
            n_cols: g.n_cols(),
        });
    }
    params.validate()?;
    check_non_negative(g)?;
    let mut a = column_normalize(&add_self_loops(g))?;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iter {
        let mut b = engine.product(&a, &a)?;
        for _ in 2..params.e {
            b = engine.product(&b, &a)?;
        }
        let b = prune_columns(&b, params.theta, params.k);
        let next = column_normalize(&inflate(&b, params.r))?;
        iterations += 1;
        observe(iterations, &next);
        let delta = max_abs_diff(&a, &next);
        a = next;
        if delta < params.eps {
            converged = true;
            break;
        }
    }
    Ok(MclOutcome {
        clusters: ClusterAssignment::from_components(&a),
        iterations,
        converged,
    })
}

/// One `node_id cluster_id` line per node.
pub fn write_clusters<W: std::io::Write>(mut w: W, c: &ClusterAssignment) -> std::io::Result<()> {
    for (node, id) in c.cluster_of_node.iter().enumerate() {
        writeln!(w, "{node} {id}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{SpgemmConfig, Triplet};

    fn col(values: &[f64]) -> CsrMatrix {
        let t: Vec<Triplet> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Triplet::new(i, 0, v))
            .collect();
        CsrMatrix::from_triplets(values.len(), 1, &t, Default::default()).unwrap()
    }

    fn engine() -> Engine {
        Engine::new(SpgemmConfig::default().with_workers(2)).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            column_normalize(&col(&[2.0, 2.0])).unwrap().values(),
            &[0.5, 0.5]
        );
        let m = CsrMatrix::try_from_parts(2, 2, vec![0, 1, 1], vec![0], vec![3.0]).unwrap();
        let n = column_normalize(&m).unwrap();
        assert_eq!(n.values(), &[1.0]);
        assert!(matches!(
            column_normalize(&col(&[1.0, -1.0])),
            Err(Error::NegativeEntry { row: 1, col: 0, .. })
        ));
    }

    #[test]
    fn prune_examples() {
        assert_eq!(
            prune_columns(&col(&[0.5, 0.3, 0.2]), 0.25, Some(1)).values(),
            &[0.5]
        );
        let c = col(&[0.5, 0.3, 0.2]);
        assert_eq!(prune_columns(&c, 0.0, Some(3)), c);
        assert_eq!(prune_columns(&c, 0.9, None).nnz(), 0);
        // ties go to the smaller row
        let t = prune_columns(&col(&[0.2, 0.4, 0.4, 0.4]), 0.0, Some(2));
        assert_eq!(t.row_ptr(), &[0, 0, 1, 2, 2]);
    }

    #[test]
    fn inflate_then_normalize() {
        let m = column_normalize(&inflate(&col(&[0.6, 0.4]), 2.0)).unwrap();
        assert!((m.values()[0] - 0.36 / 0.52).abs() < 1e-15);
        assert!((m.values()[1] - 0.16 / 0.52).abs() < 1e-15);
    }

    #[test]
    fn self_loops_only_where_missing() {
        let g = CsrMatrix::try_from_parts(2, 2, vec![0, 1, 2], vec![0, 0], vec![5.0, 1.0]).unwrap();
        let s = add_self_loops(&g);
        assert_eq!(s.col_idx(), &[0, 0, 1]);
        assert_eq!(s.values(), &[5.0, 1.0, 1.0]);
    }

    #[test]
    fn diff_over_union_support() {
        let x = CsrMatrix::try_from_parts(1, 3, vec![0, 2], vec![0, 1], vec![1.0, 0.5]).unwrap();
        let y = CsrMatrix::try_from_parts(1, 3, vec![0, 2], vec![1, 2], vec![0.25, 0.125]).unwrap();
        assert_eq!(max_abs_diff(&x, &y), 1.0);
        assert_eq!(max_abs_diff(&x, &x), 0.0);
    }

    #[test]
    fn single_node() {
        let out = mcl(&CsrMatrix::zeros(1, 1), &MclParams::default(), &engine()).unwrap();
        assert_eq!(out.clusters.n_clusters, 1);
        assert!(out.converged && out.iterations <= 2);
    }

    #[test]
    fn rejects_bad_input() {
        let e = engine();
        assert!(matches!(
            mcl(&CsrMatrix::zeros(2, 3), &MclParams::default(), &e),
            Err(Error::NotSquare { .. })
        ));
        let bad = MclParams {
            e: 1,
            ..Default::default()
        };
        assert!(matches!(
            mcl(&CsrMatrix::zeros(2, 2), &bad, &e),
            Err(Error::BadConfig(_))
        ));
    }

    #[test]
    fn components_numbered_by_first_node() {
        let m = CsrMatrix::try_from_parts(4, 4, vec![0, 0, 1, 1, 1], vec![3], vec![1.0]).unwrap();
        let c = ClusterAssignment::from_components(&m);
        assert_eq!(c.cluster_of_node, vec![0, 1, 2, 1]);
        assert_eq!(c.members(), vec![vec![0], vec![1, 3], vec![2]]);
    }
}
