//! Ready-made sheaves used by the command line scenarios, the tests and the examples.
//!
//! * [`sar`]: the search-and-rescue sensor network with its three recorded cases.
//! * [`obstacle`]: two camera views around an obstacle, as a raw mosaic and as a summary.
//! * [`coins`]: two overlapping camera views of coins with three choices of overlap stalk.
//! * [`toys`]: small sheaves with known cohomology.

pub mod coins;
pub mod obstacle;
pub mod sar;
pub mod toys;

pub use coins::{build_coin_sheaf, coin_value, CoinVariant, COIN_VALUES};
pub use obstacle::{build_obstacle_sheaves, obstacle_cover, overlap_refinement, ObstacleParams};
pub use sar::{
    build_sar_sheaf, crash_error_km, crash_estimate, sar_case, sar_case_assignment, sar_opens, FusedExpectation,
    SarCase, SarOpens, SarParameters, SarWeights, SAR_CASES, SAR_ENTITIES,
};
pub use toys::{chain_sheaf, circle_sheaf, gluing_counterexample, locally_constant_sheaf, pseudocircle_suspension};

use alloc::vec::Vec;

use crate::topology::{EntitySet, Topology};

/// Maximal basis sets strictly inside `set`.
pub(crate) fn basis_children(topology: &Topology, set: EntitySet) -> Vec<EntitySet> {
    let inside: Vec<EntitySet> =
        topology.basis().iter().copied().filter(|b| !b.is_empty() && b.is_strict_subset(set)).collect();
    inside.iter().copied().filter(|b| !inside.iter().any(|c| b.is_strict_subset(*c))).collect()
}
