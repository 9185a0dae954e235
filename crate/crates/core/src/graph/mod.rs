//! Graph storage, edge-list ingestion, fold partitions and label agreement.

mod adjacency;
mod components;
mod io;
mod membership;
mod partition;

pub use adjacency::{AdjacencyMatrix, NodeSet, RectView};
pub use components::largest_connected_component;
pub use io::{load_edge_list, read_edge_list, write_edge_list, IdMap};
pub use membership::{
    hamming_up_to_permutation, max_agreement_assignment, Membership,
};
pub use partition::{partition_nodes, FoldPartition};
