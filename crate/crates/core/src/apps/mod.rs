//! Graph workloads driven by the SpGEMM engine.

mod contract;
mod mcl;

pub use contract::{build_selector, graph_contract, LabelVector};
pub use mcl::{
    add_self_loops, column_normalize, column_sums, inflate, max_abs_diff, mcl, mcl_observed,
    prune_columns, write_clusters, ClusterAssignment, MclOutcome, MclParams,
};
