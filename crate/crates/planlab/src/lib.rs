//! planlab: a laboratory for generating, sampling, and optimizing
//! districting plans — balanced, contiguous partitions of a unit graph.
//!
//! The crate is organized around a small core (graph, plan, constraints,
//! scoring) shared by independent algorithm families:
//!
//! - [`enumerate`]: exhaustive enumeration on small instances, the oracle.
//! - [`samplers`]: from-scratch random generators (random assignment,
//!   flood fill variants, iterative merging).
//! - [`chains`]: plan-to-plan random walks (flip, swap, recombination).
//! - [`geometric`]: centroid-based partitioners (splitline, k-means,
//!   balanced power diagrams).
//! - [`optimize`]: metaheuristics and an exact branch-and-bound cut-edge
//!   minimizer with a Pareto sweep over deviation allowances.
//! - [`analyze`]: ensemble histograms, edge frequencies, and
//!   sampler-vs-oracle divergence statistics.
//!
//! Everything is deterministic given a seed; `UnitGraph` is immutable and
//! freely shareable across threads.

pub mod analyze;
pub mod chains;
pub mod cli;
pub mod constraints;
pub mod ensemble;
pub mod enumerate;
pub mod geometric;
pub mod graph;
pub mod hash;
pub mod instances;
pub mod optimize;
pub mod plan;
pub mod samplers;
pub mod score;
pub mod stats;

pub use constraints::Constraints;
pub use graph::UnitGraph;
pub use plan::{District, Plan};
pub use score::{validate, ScoreReport};

#[cfg(test)]
pub(crate) mod testutil {
    use crate::instances::{make_grid, GridSpec};
    use crate::plan::Plan;
    use crate::graph::UnitGraph;

    pub fn grid(n: usize) -> UnitGraph {
        make_grid(&GridSpec::uniform(n, n)).unwrap()
    }

    /// Four 3×3 blocks on the 6×6 grid: the 12-cut-edge reference plan.
    pub fn quadrant_plan_6x6() -> Plan {
        let mut labels = vec![0u16; 36];
        for r in 0..6 {
            for c in 0..6 {
                labels[r * 6 + c] = ((r / 3) * 2 + c / 3) as u16;
            }
        }
        Plan::from_labels(labels, 4).unwrap()
    }
}
