//! Brute-force ground truth: exhaustive enumeration of small labelled
//! series-parallel graphs, networks and cubic multigraphs, with exact
//! spanning tree and 2-forest counts.
//!
//! Nothing here depends on generating functions.

pub mod census;
pub mod det;
pub mod graph;
pub mod multigraph;

pub use census::{
    census, fold_sp_graphs, is_network, is_two_tree, network_census, sp_census, totals, CensusOptions, CensusRow, GraphClass, NetworkRow,
    SpCensus, DEFAULT_CAP, DEFAULT_NETWORK_CAP,
};
pub use graph::LabelledGraph;
pub use multigraph::{cubic_census, deletion_contraction_trees, kernel_extract, CubicRow, WeightedMultigraph, DEFAULT_EXCESS_CAP};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("{what} = {n} exceeds the cap {cap} ({estimate})")]
    CapExceeded {
        what: &'static str,
        n: usize,
        cap: usize,
        estimate: String,
    },
    #[error("kernel needs excess at least 1, got {excess}")]
    ExcessTooSmall { excess: i64 },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}
