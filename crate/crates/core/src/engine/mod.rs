//! Hash-based multi-phase SpGEMM.
//!
//! `C = A * B` is computed in three phases separated by barriers:
//!
//! 1. **Grouping**: count the intermediate products (IP) of every output row
//!    and bin rows into four groups by IP (`0-31`, `32-511`, `512-8191`,
//!    `>= 8192` by default).
//! 2. **Allocation**: insert every column key a row reaches into a hash table
//!    and count the distinct keys, giving the row pointers of `C`.
//! 3. **Accumulation**: insert again while adding `a_ik * b_kj` into the
//!    table's value slots, gather the pairs into the row's output span and sort
//!    them by column.
//!
//! Group 0 rows are handled one per worker ("partial warp per row"). Rows of
//! groups 1-3 either get one worker each, or, in shared-table mode, a team of
//! cooperating workers that all insert into one table ("thread block per
//! row"): the team strides over the row's nonzeros in `A` and, within a team
//! slice, over the referenced row of `B`.
//!
//! A key is stored as soon as some product reaches it, so entries that cancel
//! to exactly zero stay in the output structure.

mod grouping;
mod hash;
mod sort;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csr::CsrMatrix;
use crate::error::{dim_mismatch, Error, Result};

pub use grouping::{count_intermediate_products, group_of, group_rows, RowGroupPlan, N_GROUPS};
pub use hash::HashAccumulator;
pub use sort::{bitonic_sort_pairs, BITONIC_MAX_LEN};

pub const DEFAULT_MULTIPLIER: u64 = 0x9E37_79B1;
pub const DEFAULT_GROUP_THRESHOLDS: [usize; 3] = [32, 512, 8192];
pub const DEFAULT_TABLE_SIZES: [usize; 3] = [64, 1024, 8192];
/// Thread block sizes of the GPU kernels, kept for reference; the CPU
/// scheduler does not use them.
pub const GPU_THREAD_BLOCK_SIZES: [usize; 4] = [512, 256, 1024, 1024];

/// Team shape `(outer stride over A's nonzeros, inner stride over B's row)`.
const PWPR_TEAM: (usize, usize) = (4, 1);
const TBPR_TEAM: (usize, usize) = (4, 8);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpgemmConfig {
    pub group_thresholds: [usize; 3],
    /// Fixed table capacities of groups 0-2; group 3 tables are sized per row.
    pub table_sizes: [usize; 3],
    pub thread_block_sizes: [usize; 4],
    pub worker_count: usize,
    pub shared_table_mode: bool,
    pub multiplier: u64,
    /// Sort output rows with the bitonic network (rows up to 8192 entries).
    pub bitonic_sort: bool,
}

impl Default for SpgemmConfig {
    fn default() -> Self {
        Self {
            group_thresholds: DEFAULT_GROUP_THRESHOLDS,
            table_sizes: DEFAULT_TABLE_SIZES,
            thread_block_sizes: GPU_THREAD_BLOCK_SIZES,
            worker_count: max_workers(),
            shared_table_mode: false,
            multiplier: DEFAULT_MULTIPLIER,
            bitonic_sort: false,
        }
    }
}

pub fn max_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl SpgemmConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.worker_count = workers;
        self
    }

    pub fn with_shared_tables(mut self, on: bool) -> Self {
        self.shared_table_mode = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.group_thresholds;
        if !(0 < t[0] && t[0] < t[1] && t[1] < t[2]) {
            return Err(Error::BadConfig(format!(
                "group thresholds must be increasing and positive, got {t:?}"
            )));
        }
        if let Some(s) = self.table_sizes.iter().find(|s| !s.is_power_of_two()) {
            return Err(Error::BadConfig(format!(
                "table size {s} is not a power of two"
            )));
        }
        if self.multiplier.is_multiple_of(2) {
            return Err(Error::BadConfig("hash multiplier must be odd".into()));
        }
        if self.worker_count == 0 {
            return Err(Error::BadConfig("worker_count must be at least 1".into()));
        }
        Ok(())
    }

    fn initial_table(&self, values: bool) -> HashAccumulator {
        let t = if values {
            HashAccumulator::with_values(self.table_sizes[0], self.multiplier)
        } else {
            HashAccumulator::new(self.table_sizes[0], self.multiplier)
        };
        t.expect("table sizes are validated")
    }

    /// Table capacity for a row: the smallest configured size that holds the
    /// next power of two above its IP, else a dedicated table of that size.
    /// Distinct keys never exceed `n_cols_b`, which bounds the dynamic case.
    pub fn table_capacity(&self, ip: usize, n_cols_b: usize) -> usize {
        let need = ip.min(n_cols_b).max(1).next_power_of_two();
        self.table_sizes
            .iter()
            .copied()
            .find(|&s| s >= need)
            .unwrap_or(need)
    }
}

/// Counters and timings of one multiplication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpgemmStats {
    pub total_ip: usize,
    pub nnz_out: usize,
    pub grouping_secs: f64,
    pub allocation_secs: f64,
    pub accumulation_secs: f64,
    pub total_secs: f64,
    /// `2 * total_ip / total_secs`.
    pub flops: f64,
}

/// SpGEMM engine bound to a worker pool.
pub struct Engine {
    config: SpgemmConfig,
    pool: rayon::ThreadPool,
}

impl Engine {
    pub fn new(config: SpgemmConfig) -> Result<Self> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.worker_count)
            .thread_name(|i| format!("spgemm-worker-{i}"))
            .build()
            .map_err(|e| Error::BadConfig(e.to_string()))?;
        Ok(Self { config, pool })
    }

    pub fn config(&self) -> &SpgemmConfig {
        &self.config
    }

    pub fn count_intermediate_products(&self, a: &CsrMatrix, b: &CsrMatrix) -> Result<Vec<usize>> {
        self.pool.install(|| count_intermediate_products(a, b))
    }

    pub fn plan(&self, a: &CsrMatrix, b: &CsrMatrix) -> Result<RowGroupPlan> {
        let ip = self.count_intermediate_products(a, b)?;
        Ok(group_rows(&ip, &self.config.group_thresholds))
    }

    /// `a * b` with phase timings.
    pub fn multiply(&self, a: &CsrMatrix, b: &CsrMatrix) -> Result<(CsrMatrix, SpgemmStats)> {
        let start = Instant::now();
        let plan = self.plan(a, b)?;
        let grouped = Instant::now();
        let row_ptr = self.allocation_phase(a, b, &plan)?;
        let allocated = Instant::now();
        let c = self.accumulation_phase(a, b, &plan, &row_ptr)?;
        let done = Instant::now();

        let total_secs = (done - start).as_secs_f64();
        let stats = SpgemmStats {
            total_ip: plan.total_ip,
            nnz_out: c.nnz(),
            grouping_secs: (grouped - start).as_secs_f64(),
            allocation_secs: (allocated - grouped).as_secs_f64(),
            accumulation_secs: (done - allocated).as_secs_f64(),
            total_secs,
            flops: if total_secs > 0.0 {
                2.0 * plan.total_ip as f64 / total_secs
            } else {
                0.0
            },
        };
        Ok((c, stats))
    }

    /// `a * b` without statistics.
    pub fn product(&self, a: &CsrMatrix, b: &CsrMatrix) -> Result<CsrMatrix> {
        self.multiply(a, b).map(|(c, _)| c)
    }

    fn check_operands(&self, a: &CsrMatrix, b: &CsrMatrix, plan: &RowGroupPlan) -> Result<()> {
        if a.n_cols() != b.n_rows() {
            return Err(dim_mismatch("a.n_cols vs b.n_rows", a.n_cols(), b.n_rows()));
        }
        if plan.n_rows() != a.n_rows() || plan.sorted_ids.len() != a.n_rows() {
            return Err(Error::PlanMismatch(format!(
                "plan covers {} rows, A has {}",
                plan.n_rows(),
                a.n_rows()
            )));
        }
        Ok(())
    }

    /// Symbolic phase: row pointers of `a * b`.
    pub fn allocation_phase(
        &self,
        a: &CsrMatrix,
        b: &CsrMatrix,
        plan: &RowGroupPlan,
    ) -> Result<Vec<usize>> {
        self.check_operands(a, b, plan)?;
        let cfg = &self.config;
        let per_group: Vec<Vec<(usize, usize)>> = self.pool.install(|| {
            (0..N_GROUPS)
                .into_par_iter()
                .map(|g| {
                    plan.group(g)
                        .par_iter()
                        .filter(|&&row| plan.ip_per_row[row] > 0)
                        .map_init(
                            || cfg.initial_table(false),
                            |table, &row| {
                                let cap = cfg.table_capacity(plan.ip_per_row[row], b.n_cols());
                                let count = if cfg.shared_table_mode {
                                    let shared = HashAccumulator::new(cap, cfg.multiplier)?;
                                    fill_row_team(a, b, row, &shared, false, team_for(g))?;
                                    shared.unique_count()
                                } else {
                                    table.reset(cap)?;
                                    fill_row(a, b, row, table, false)?;
                                    table.unique_count()
                                };
                                Ok((row, count))
                            },
                        )
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let mut counts = vec![0usize; a.n_rows()];
        for (row, count) in per_group.into_iter().flatten() {
            counts[row] = count;
        }
        let mut row_ptr = Vec::with_capacity(a.n_rows() + 1);
        row_ptr.push(0);
        let mut acc = 0usize;
        for c in counts {
            acc += c;
            row_ptr.push(acc);
        }
        Ok(row_ptr)
    }

    /// Numeric phase: fills the structure given by `row_ptr_c`.
    pub fn accumulation_phase(
        &self,
        a: &CsrMatrix,
        b: &CsrMatrix,
        plan: &RowGroupPlan,
        row_ptr_c: &[usize],
    ) -> Result<CsrMatrix> {
        self.check_operands(a, b, plan)?;
        let n = a.n_rows();
        if row_ptr_c.len() != n + 1 {
            return Err(dim_mismatch(
                "row_ptr_c length vs n_rows + 1",
                row_ptr_c.len(),
                n + 1,
            ));
        }
        if row_ptr_c[0] != 0 || row_ptr_c.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidMatrix("row_ptr_c is not a prefix sum".into()));
        }
        let nnz = row_ptr_c[n];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0f64; nnz];

        // Disjoint output span per row, then regrouped in plan order.
        let mut spans: Vec<Option<(&mut [usize], &mut [f64])>> = Vec::with_capacity(n);
        let (mut cols_rest, mut vals_rest) = (&mut col_idx[..], &mut values[..]);
        for i in 0..n {
            let len = row_ptr_c[i + 1] - row_ptr_c[i];
            let (c, cr) = std::mem::take(&mut cols_rest).split_at_mut(len);
            let (v, vr) = std::mem::take(&mut vals_rest).split_at_mut(len);
            cols_rest = cr;
            vals_rest = vr;
            spans.push(Some((c, v)));
        }
        let mut work: Vec<Vec<RowSpan<'_>>> = (0..N_GROUPS)
            .map(|g| {
                plan.group(g)
                    .iter()
                    .map(|&row| {
                        let (cols, vals) = spans[row].take().expect("row listed twice in plan");
                        RowSpan { row, cols, vals }
                    })
                    .collect()
            })
            .collect();

        let cfg = &self.config;
        self.pool.install(|| {
            work.par_iter_mut().enumerate().try_for_each(|(g, items)| {
                items.par_iter_mut().try_for_each_init(
                    || (cfg.initial_table(true), Vec::new()),
                    |(table, pairs), span| {
                        let ip = plan.ip_per_row[span.row];
                        if ip == 0 {
                            return check_gathered(span.row, 0, span.cols.len());
                        }
                        let cap = cfg.table_capacity(ip, b.n_cols());
                        pairs.clear();
                        if cfg.shared_table_mode {
                            let shared = HashAccumulator::with_values(cap, cfg.multiplier)?;
                            fill_row_team(a, b, span.row, &shared, true, team_for(g))?;
                            shared.gather_into(pairs);
                        } else {
                            table.reset(cap)?;
                            fill_row(a, b, span.row, table, true)?;
                            table.gather_into(pairs);
                        }
                        check_gathered(span.row, pairs.len(), span.cols.len())?;
                        sort::sort_row(pairs, cfg.bitonic_sort);
                        for ((c, v), &(key, val)) in span
                            .cols
                            .iter_mut()
                            .zip(span.vals.iter_mut())
                            .zip(pairs.iter())
                        {
                            *c = key;
                            *v = val;
                        }
                        Ok(())
                    },
                )
            })
        })?;

        Ok(CsrMatrix::from_parts_unchecked(
            n,
            b.n_cols(),
            row_ptr_c.to_vec(),
            col_idx,
            values,
        ))
    }
}

struct RowSpan<'a> {
    row: usize,
    cols: &'a mut [usize],
    vals: &'a mut [f64],
}

fn check_gathered(row: usize, gathered: usize, allocated: usize) -> Result<()> {
    if gathered != allocated {
        return Err(Error::CapacityMismatch {
            row,
            gathered,
            allocated,
        });
    }
    Ok(())
}

fn team_for(group: usize) -> (usize, usize) {
    if group == 0 {
        PWPR_TEAM
    } else {
        TBPR_TEAM
    }
}

/// Single worker: every product of `row` goes into `table`.
fn fill_row(
    a: &CsrMatrix,
    b: &CsrMatrix,
    row: usize,
    table: &HashAccumulator,
    accumulate: bool,
) -> Result<()> {
    let (a_cols, a_vals) = a.row(row);
    for (&k, &av) in a_cols.iter().zip(a_vals) {
        let (b_cols, b_vals) = b.row(k);
        if accumulate {
            for (&j, &bv) in b_cols.iter().zip(b_vals) {
                table.insert_accumulate(j, av, bv)?;
            }
        } else {
            for &j in b_cols {
                table.insert(j)?;
            }
        }
    }
    Ok(())
}

/// Cooperative fill: member `m` takes A-nonzeros `m / inner` (mod `outer`)
/// and, inside each referenced B row, entries `m % inner` (mod `inner`).
fn fill_row_team(
    a: &CsrMatrix,
    b: &CsrMatrix,
    row: usize,
    table: &HashAccumulator,
    accumulate: bool,
    (outer, inner): (usize, usize),
) -> Result<()> {
    let (a_cols, a_vals) = a.row(row);
    (0..outer * inner).into_par_iter().try_for_each(|member| {
        let (warp, lane) = (member / inner, member % inner);
        for j in (warp..a_cols.len()).step_by(outer) {
            let (b_cols, b_vals) = b.row(a_cols[j]);
            for k in (lane..b_cols.len()).step_by(inner) {
                if accumulate {
                    table.insert_accumulate(b_cols[k], a_vals[j], b_vals[k])?;
                } else {
                    table.insert(b_cols[k])?;
                }
            }
        }
        Ok(())
    })
}

/// One-shot `a * b` on a fresh worker pool.
pub fn spgemm(
    a: &CsrMatrix,
    b: &CsrMatrix,
    config: &SpgemmConfig,
) -> Result<(CsrMatrix, SpgemmStats)> {
    Engine::new(config.clone())?.multiply(a, b)
}

pub fn allocation_phase(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    config: &SpgemmConfig,
) -> Result<Vec<usize>> {
    Engine::new(config.clone())?.allocation_phase(a, b, plan)
}

pub fn accumulation_phase(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    row_ptr_c: &[usize],
    config: &SpgemmConfig,
) -> Result<CsrMatrix> {
    Engine::new(config.clone())?.accumulation_phase(a, b, plan, row_ptr_c)
}
