use serde::{Deserialize, Serialize};

use super::cache::{CacheConfig, CacheSim};
use super::request::{build_spgemm_access_plan, AddressLayout, Phase, SpgemmMemory};
use super::trace::{expand_trace, AccessMode, AccessTrace};
use crate::csr::CsrMatrix;
use crate::engine::RowGroupPlan;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    pub round_trips: u64,
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub hit_ratio: f64,
    pub bytes_moved: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    pub phase: Phase,
    pub requests: usize,
    pub baseline: ModeMetrics,
    pub aia: ModeMetrics,
    /// Every request fetched the same data elements in both modes.
    pub data_multiset_equal: bool,
}

impl PhaseReport {
    pub fn metrics(&self, mode: AccessMode) -> &ModeMetrics {
        match mode {
            AccessMode::Baseline => &self.baseline,
            AccessMode::Aia => &self.aia,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub cache: CacheConfig,
    pub phases: Vec<PhaseReport>,
}

impl ModeReport {
    pub fn phase(&self, phase: Phase) -> Option<&PhaseReport> {
        self.phases.iter().find(|p| p.phase == phase)
    }
}

/// Replays one phase in both modes, each through its own cold cache.
pub fn compare_phase(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    phase: Phase,
    cache: CacheConfig,
) -> Result<PhaseReport> {
    let requests = build_spgemm_access_plan(a, b, plan, phase)?;
    let memory = SpgemmMemory::new(a, b, plan);
    let layout = AddressLayout::for_spgemm(a, b);
    let mut sims = [CacheSim::new(cache)?, CacheSim::new(cache)?];
    let mut round_trips = [0u64; 2];
    let mut equal = true;
    for req in &requests {
        let traces = [
            expand_trace(req, &memory, &layout, AccessMode::Baseline)?,
            expand_trace(req, &memory, &layout, AccessMode::Aia)?,
        ];
        equal &= traces[0].data_multiset() == traces[1].data_multiset();
        for ((sim, rt), t) in sims.iter_mut().zip(&mut round_trips).zip(&traces) {
            sim.replay(&t.events);
            *rt += t.round_trips as u64;
        }
    }
    let metrics = |i: usize| {
        let s = sims[i].stats();
        ModeMetrics {
            round_trips: round_trips[i],
            accesses: s.accesses,
            hits: s.hits,
            misses: s.misses,
            hit_ratio: s.hit_ratio(),
            bytes_moved: s.misses * cache.line_bytes as u64,
        }
    };
    Ok(PhaseReport {
        phase,
        requests: requests.len(),
        baseline: metrics(0),
        aia: metrics(1),
        data_multiset_equal: equal,
    })
}

/// Both phases of `A * B` under both access modes.
pub fn compare_modes(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    cache: CacheConfig,
) -> Result<ModeReport> {
    let phases = Phase::BOTH
        .iter()
        .map(|&p| compare_phase(a, b, plan, p, cache))
        .collect::<Result<_>>()?;
    Ok(ModeReport { cache, phases })
}

/// Full access trace of one phase in one mode, requests in issue order.
pub fn phase_trace(
    a: &CsrMatrix,
    b: &CsrMatrix,
    plan: &RowGroupPlan,
    phase: Phase,
    mode: AccessMode,
) -> Result<AccessTrace> {
    let memory = SpgemmMemory::new(a, b, plan);
    let layout = AddressLayout::for_spgemm(a, b);
    let mut trace = AccessTrace::empty(mode);
    for req in build_spgemm_access_plan(a, b, plan, phase)? {
        trace.extend(expand_trace(&req, &memory, &layout, mode)?);
    }
    Ok(trace)
}
