//! Memory-access model of ranged indirect requests.
//!
//! An SpGEMM phase is expressed as a list of [`AiaRequest`]s. Each request is
//! expanded into the accesses a processor would make resolving the indices
//! itself ([`AccessMode::Baseline`]) or the accesses seen when a memory-side
//! engine resolves them ([`AccessMode::Aia`]), and both traces are replayed
//! through a set-associative cache model.

mod cache;
mod report;
mod request;
mod trace;

pub use cache::{simulate_cache, CacheConfig, CacheSim, CacheStats, Replacement};
pub use report::{compare_modes, compare_phase, phase_trace, ModeMetrics, ModeReport, PhaseReport};
pub use request::{
    build_spgemm_access_plan, AddressLayout, AiaRequest, ArrayId, ArrayRef, Dst, IndexResolver,
    Phase, SpgemmMemory, LAYOUT_ALIGN,
};
pub use trace::{expand_trace, write_trace_dump, AccessEvent, AccessKind, AccessMode, AccessTrace};
