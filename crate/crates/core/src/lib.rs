//! Sparse matrix kit: CSR storage, a hash-based multi-phase SpGEMM engine, a
//! simulator for ranged indirect memory access near HBM, and graph workloads
//! (Markov clustering, graph contraction, top-k pruned propagation) built on
//! the engine.

pub mod aia;
pub mod apps;
mod csr;
pub mod engine;
mod error;
pub mod io;
pub mod oracle;
pub mod propagation;

pub use csr::{validate_parts, CsrMatrix, DuplicatePolicy, Triplet, Violation};
pub use engine::{spgemm, Engine, RowGroupPlan, SpgemmConfig, SpgemmStats};
pub use error::{Error, Result};
