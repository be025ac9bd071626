//! Soft-constrained hierarchical clustering.
//!
//! Step I coarsens a distance graph into a dendrogram while layered
//! must-link / cannot-link constraints bend the distances; Step II cuts the
//! dendrogram once per layer at the height that best respects that layer.

pub mod coarsening;
pub mod constraints;
pub mod cuts;
pub mod dendrogram;
pub mod error;
pub mod ingest;
pub mod linkage;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod synth;
mod union_find;

pub use coarsening::{run_step1, CoarseningConfig, CoarseningMethod, LoopGuard, Step1Report};
pub use constraints::{FeasibleSet, PenaltyWeights, QpOptions};
pub use dendrogram::{Dendrogram, Merge};
pub use error::{Error, Result};
pub use linkage::{nn_chain_linkage, LinkageMethod};
pub use model::{
    ConstraintLayer, ConstraintProgram, DataPointSet, DistanceMatrix, FlatHierarchy, IndexedConstraints, IndexedLayer,
    LaplacianView, Partition,
};
pub use union_find::UnionFind;
