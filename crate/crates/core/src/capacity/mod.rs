//! Rate regions of lossy packet networks: cut values, max-flow on graphs,
//! feasible flows on hypergraphs, cycle removal and path decomposition.

mod cut;
mod flow;
mod graph;
mod paths;
pub mod simplex;
mod wireless;

pub use cut::{cut_value, min_cut_enumerate, multicast_region, Cut, CutNetwork, MAX_ENUMERATION_NODES};
pub use flow::{max_flow_wireline, FlowArc, FlowSolution};
pub use graph::{Hyperarc, Link, NodeSet, RateGraph, RateHypergraph};
pub use paths::{decompose_paths, remove_cycles, FlowPath, PathDecomposition};
pub use wireless::{
    feasible_flow_wireless, max_flow_wireless, HyperFlow, Splitting, MAX_LP_CONSTRAINTS,
};
