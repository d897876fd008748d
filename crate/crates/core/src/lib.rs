//! Subgraph isomorphism enumeration by color coding over a nice tree
//! decomposition of the pattern.

pub mod bench;
pub mod coloring;
pub mod compress;
pub mod config;
pub mod dp;
pub mod engine;
pub mod graph;
pub mod occurrence;
pub mod oracle;
pub mod reconstruct;
pub mod treedecomp;

pub use coloring::{iteration_count, ColorSet, Coloring};
pub use engine::{solve, Solution, SolveError, SolveOptions, SolveReport, StopReason};
pub use graph::{parse_graph, Graph, GraphError, GraphFormat, MappingMask, Vertex};
pub use occurrence::{Mode, OccurrenceSet};
pub use treedecomp::{exact_treewidth, NiceTreeDecomposition, TreeDecomposition};
