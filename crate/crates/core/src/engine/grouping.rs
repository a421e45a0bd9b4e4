use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::error::{dim_mismatch, Result};

pub const N_GROUPS: usize = 4;

/// Per-row intermediate-product counts and the group-sorted row order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowGroupPlan {
    pub ip_per_row: Vec<usize>,
    pub group_of_row: Vec<u8>,
    /// Sorted position -> original row ID.
    pub sorted_ids: Vec<usize>,
    /// Group `g` occupies `sorted_ids[group_bounds[g]..group_bounds[g + 1]]`.
    pub group_bounds: [usize; N_GROUPS + 1],
    pub total_ip: usize,
}

impl RowGroupPlan {
    pub fn n_rows(&self) -> usize {
        self.ip_per_row.len()
    }

    /// Original row IDs of group `g`, ascending.
    pub fn group(&self, g: usize) -> &[usize] {
        &self.sorted_ids[self.group_bounds[g]..self.group_bounds[g + 1]]
    }

    pub fn group_len(&self, g: usize) -> usize {
        self.group_bounds[g + 1] - self.group_bounds[g]
    }
}

/// Number of scalar products each output row needs: for row `i`, the sum over
/// the nonzeros `A[i,k]` of the length of row `k` of `B`.
pub fn count_intermediate_products(a: &CsrMatrix, b: &CsrMatrix) -> Result<Vec<usize>> {
    if a.n_cols() != b.n_rows() {
        return Err(dim_mismatch("a.n_cols vs b.n_rows", a.n_cols(), b.n_rows()));
    }
    let rpt_b = b.row_ptr();
    Ok((0..a.n_rows())
        .into_par_iter()
        .map(|i| {
            a.row(i)
                .0
                .iter()
                .map(|&col| rpt_b[col + 1] - rpt_b[col])
                .sum()
        })
        .collect())
}

/// Group index of a row: the number of thresholds it reaches.
pub fn group_of(ip: usize, thresholds: &[usize; 3]) -> u8 {
    thresholds.iter().filter(|&&t| ip >= t).count() as u8
}

/// Bins rows by IP and orders them group by group, ascending row ID within
/// a group. Empty rows land in group 0.
pub fn group_rows(ip: &[usize], thresholds: &[usize; 3]) -> RowGroupPlan {
    let group_of_row: Vec<u8> = ip.iter().map(|&x| group_of(x, thresholds)).collect();
    let mut counts = [0usize; N_GROUPS];
    for &g in &group_of_row {
        counts[g as usize] += 1;
    }
    let mut group_bounds = [0usize; N_GROUPS + 1];
    for g in 0..N_GROUPS {
        group_bounds[g + 1] = group_bounds[g] + counts[g];
    }
    let mut next = group_bounds;
    let mut sorted_ids = vec![0usize; ip.len()];
    for (row, &g) in group_of_row.iter().enumerate() {
        sorted_ids[next[g as usize]] = row;
        next[g as usize] += 1;
    }
    RowGroupPlan {
        ip_per_row: ip.to_vec(),
        group_of_row,
        sorted_ids,
        group_bounds,
        total_ip: ip.iter().sum(),
    }
}
