use std::fmt;

use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::engine::RowGroupPlan;
use crate::error::{Error, Result};

/// Arrays touched by SpGEMM, in address-layout declaration order.
///
/// `Aia1` and `Aia2` are the destination buffers of the two ranged-index
/// passes: `Aia1[2p..2p+2]` holds `rpt_A[Map[p]..Map[p]+2]` and
/// `Aia2[2j..2j+2]` holds `rpt_B[col_A[j]..col_A[j]+2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArrayId {
    Map,
    RptA,
    ColA,
    ValA,
    RptB,
    ColB,
    ValB,
    Aia1,
    Aia2,
}

impl ArrayId {
    pub const ALL: [ArrayId; 9] = [
        ArrayId::Map,
        ArrayId::RptA,
        ArrayId::ColA,
        ArrayId::ValA,
        ArrayId::RptB,
        ArrayId::ColB,
        ArrayId::ValB,
        ArrayId::Aia1,
        ArrayId::Aia2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArrayId::Map => "map",
            ArrayId::RptA => "rpt_a",
            ArrayId::ColA => "col_a",
            ArrayId::ValA => "val_a",
            ArrayId::RptB => "rpt_b",
            ArrayId::ColB => "col_b",
            ArrayId::ValB => "val_b",
            ArrayId::Aia1 => "aia_1",
            ArrayId::Aia2 => "aia_2",
        }
    }

    /// Element width in bytes: 4 for row IDs and column indices, 8 for row
    /// offsets, values and the offset buffers.
    pub fn width(self) -> u8 {
        match self {
            ArrayId::Map | ArrayId::ColA | ArrayId::ColB => 4,
            _ => 8,
        }
    }

    pub fn as_ref(self) -> ArrayRef {
        ArrayRef {
            id: self,
            width: self.width(),
        }
    }
}

impl fmt::Display for ArrayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symbolic array plus element width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayRef {
    pub id: ArrayId,
    pub width: u8,
}

/// Where the engine delivers a request's response stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dst {
    Aia1,
    Aia2,
    /// Per-row staging of column/value spans.
    RowStage,
}

/// Ranged indirect request: for `i` in `b_offset..b_offset + n`, fetch
/// `a[b[i]] .. a[b[i] + r - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AiaRequest {
    pub dst: Dst,
    pub n: usize,
    pub r: usize,
    pub a: ArrayRef,
    pub b: ArrayRef,
    pub b_offset: usize,
}

impl AiaRequest {
    pub fn new(dst: Dst, n: usize, r: usize, a: ArrayId, b: ArrayId, b_offset: usize) -> Self {
        Self {
            dst,
            n,
            r,
            a: a.as_ref(),
            b: b.as_ref(),
            b_offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Allocation,
    Accumulation,
}

impl Phase {
    pub const BOTH: [Phase; 2] = [Phase::Allocation, Phase::Accumulation];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Allocation => "allocation",
            Phase::Accumulation => "accumulation",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Supplies the contents of index arrays (`b` operands).
pub trait IndexResolver {
    fn resolve(&self, array: ArrayId, index: usize) -> Option<usize>;
}

impl<F: Fn(ArrayId, usize) -> Option<usize>> IndexResolver for F {
    fn resolve(&self, array: ArrayId, index: usize) -> Option<usize> {
        self(array, index)
    }
}

/// Contents of every index array of one SpGEMM, including the two offset
/// buffers the ranged-index passes fill.
pub struct SpgemmMemory<'a> {
    a: &'a CsrMatrix,
    b: &'a CsrMatrix,
    map: &'a [usize],
    aia1: Vec<usize>,
    aia2: Vec<usize>,
}

impl<'a> SpgemmMemory<'a> {
    pub fn new(a: &'a CsrMatrix, b: &'a CsrMatrix, plan: &'a RowGroupPlan) -> Self {
        let rpt_a = a.row_ptr();
        let rpt_b = b.row_ptr();
        let aia1 = plan
            .sorted_ids
            .iter()
            .flat_map(|&row| [rpt_a[row], rpt_a[row + 1]])
            .collect();
        let aia2 = a
            .col_idx()
            .iter()
            .flat_map(|&c| [rpt_b[c], rpt_b[c + 1]])
            .collect();
        Self {
            a,
            b,
            map: &plan.sorted_ids,
            aia1,
            aia2,
        }
    }
}

impl IndexResolver for SpgemmMemory<'_> {
    fn resolve(&self, array: ArrayId, index: usize) -> Option<usize> {
        match array {
            ArrayId::Map => self.map.get(index).copied(),
            ArrayId::RptA => self.a.row_ptr().get(index).copied(),
            ArrayId::ColA => self.a.col_idx().get(index).copied(),
            ArrayId::RptB => self.b.row_ptr().get(index).copied(),
            ArrayId::ColB => self.b.col_idx().get(index).copied(),
            ArrayId::Aia1 => self.aia1.get(index).copied(),
            ArrayId::Aia2 => self.aia2.get(index).copied(),
            ArrayId::ValA | ArrayId::ValB => None,
        }
    }
}

/// Byte placement of each array: contiguous, in declaration order, every base
/// aligned to 64 bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AddressLayout {
    entries: Vec<(ArrayId, u64, usize, u8)>,
}

pub const LAYOUT_ALIGN: u64 = 64;

impl AddressLayout {
    /// `arrays` lists `(array, element count)`; widths come from [`ArrayId::width`].
    pub fn new(arrays: &[(ArrayId, usize)]) -> Self {
        let mut base = 0u64;
        let mut entries = Vec::with_capacity(arrays.len());
        for &(id, len) in arrays {
            let width = id.width();
            entries.push((id, base, len, width));
            let end = base + len as u64 * width as u64;
            base = end.div_ceil(LAYOUT_ALIGN) * LAYOUT_ALIGN;
        }
        Self { entries }
    }

    pub fn for_spgemm(a: &CsrMatrix, b: &CsrMatrix) -> Self {
        Self::new(&[
            (ArrayId::Map, a.n_rows()),
            (ArrayId::RptA, a.n_rows() + 1),
            (ArrayId::ColA, a.nnz()),
            (ArrayId::ValA, a.nnz()),
            (ArrayId::RptB, b.n_rows() + 1),
            (ArrayId::ColB, b.nnz()),
            (ArrayId::ValB, b.nnz()),
            (ArrayId::Aia1, 2 * a.n_rows()),
            (ArrayId::Aia2, 2 * a.nnz()),
        ])
    }

    fn entry(&self, id: ArrayId) -> Option<&(ArrayId, u64, usize, u8)> {
        self.entries.iter().find(|e| e.0 == id)
    }

    pub fn len(&self, id: ArrayId) -> Option<usize> {
        self.entry(id).map(|e| e.2)
    }

    pub fn base(&self, id: ArrayId) -> Option<u64> {
        self.entry(id).map(|e| e.1)
    }

    /// Byte address of `id[index]`, if the array is laid out and in bounds.
    pub fn addr(&self, id: ArrayId, index: usize) -> Option<u64> {
        let &(_, base, len, width) = self.entry(id)?;
        (index < len).then(|| base + index as u64 * width as u64)
    }
}

/// Requests issued by one SpGEMM phase, in execution order.
///
/// 1. Row ranges: `R = 2` over `rpt_A` indexed through `Map`, one request per
///    run of consecutive sorted positions whose rows have work.
/// 2. B-row ranges: `R = 2` over `rpt_B` indexed through `col_A`, one request
///    per run of contiguous `col_A` positions (rows visited in `Map` order).
/// 3. Data ranges, row by row: for accumulation the row's `val_A` span; then
///    per nonzero `A[i,k]` with a non-empty B row, the `col_B` span (and the
///    `val_B` span for accumulation), each addressed through the offset buffer
///    filled in step 2.
///
/// Rows with zero intermediate products are skipped, as the engine skips them.
pub fn build_spgemm_access_plan(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    phase: Phase,
) -> Result<Vec<AiaRequest>> {
    if a.n_cols() != b.n_rows() {
        return Err(Error::PlanMismatch(format!(
            "A has {} columns, B has {} rows",
            a.n_cols(),
            b.n_rows()
        )));
    }
    if plan.n_rows() != a.n_rows() || plan.sorted_ids.len() != a.n_rows() {
        return Err(Error::PlanMismatch(format!(
            "plan covers {} rows, A has {}",
            plan.n_rows(),
            a.n_rows()
        )));
    }
    let rpt_a = a.row_ptr();
    let rpt_b = b.row_ptr();
    for (row, &ip) in plan.ip_per_row.iter().enumerate() {
        let actual: usize = a.row(row).0.iter().map(|&c| rpt_b[c + 1] - rpt_b[c]).sum();
        if actual != ip {
            return Err(Error::PlanMismatch(format!(
                "row {row}: plan has {ip} intermediate products, operands give {actual}"
            )));
        }
    }
    let active: Vec<(usize, usize)> = plan
        .sorted_ids
        .iter()
        .enumerate()
        .filter(|&(_, &row)| plan.ip_per_row[row] > 0)
        .map(|(pos, &row)| (pos, row))
        .collect();

    let mut out = Vec::new();

    // level 1: runs of consecutive sorted positions
    for (start, len) in runs(active.iter().map(|&(pos, _)| (pos, 1))) {
        out.push(AiaRequest::new(
            Dst::Aia1,
            len,
            2,
            ArrayId::RptA,
            ArrayId::Map,
            start,
        ));
    }
    // level 2: runs of contiguous col_A spans
    let spans = active
        .iter()
        .map(|&(_, row)| (rpt_a[row], rpt_a[row + 1] - rpt_a[row]));
    for (start, len) in runs(spans) {
        out.push(AiaRequest::new(
            Dst::Aia2,
            len,
            2,
            ArrayId::RptB,
            ArrayId::ColA,
            start,
        ));
    }
    // data ranges
    for &(pos, row) in &active {
        if phase == Phase::Accumulation {
            out.push(AiaRequest::new(
                Dst::RowStage,
                1,
                a.row_len(row),
                ArrayId::ValA,
                ArrayId::Aia1,
                2 * pos,
            ));
        }
        for j in rpt_a[row]..rpt_a[row + 1] {
            let k = a.col_idx()[j];
            let len = rpt_b[k + 1] - rpt_b[k];
            if len == 0 {
                continue;
            }
            out.push(AiaRequest::new(
                Dst::RowStage,
                1,
                len,
                ArrayId::ColB,
                ArrayId::Aia2,
                2 * j,
            ));
            if phase == Phase::Accumulation {
                out.push(AiaRequest::new(
                    Dst::RowStage,
                    1,
                    len,
                    ArrayId::ValB,
                    ArrayId::Aia2,
                    2 * j,
                ));
            }
        }
    }
    Ok(out)
}

/// Merges `(start, len)` spans into maximal contiguous runs.
fn runs(spans: impl Iterator<Item = (usize, usize)>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (start, len) in spans {
        if len == 0 {
            continue;
        }
        match out.last_mut() {
            Some((s, l)) if *s + *l == start => *l += len,
            _ => out.push((start, len)),
        }
    }
    out
}
