//! Verification that a cover is Leray for a linear sheaf.

use alloc::vec::Vec;

use super::{betti, nerve, BettiTable, Cover, PosetComplex};
use crate::sheaf::Sheaf;
use crate::topology::OpenId;
use crate::Result;

/// Acyclicity of the sheaf on one intersection of cover members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionCheck {
    /// Cover indices of the first (lexicographically smallest) list giving this open.
    pub indices: Vec<usize>,
    /// The intersection.
    pub open: OpenId,
    /// Cohomology of the sheaf restricted to the intersection, degrees `0..=max_degree`.
    pub betti: Vec<usize>,
    /// True when every positive-degree Betti number vanishes.
    pub acyclic: bool,
}

/// Outcome of [`leray_check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LerayReport {
    /// One entry per distinct nonempty intersection, in order of first appearance.
    pub intersections: Vec<IntersectionCheck>,
    /// True when every intersection is acyclic.
    pub verdict: bool,
    /// Čech cohomology on the cover.
    pub cover_betti: BettiTable,
    /// Cohomology on the whole topology.
    pub topology_betti: BettiTable,
}

impl LerayReport {
    /// True when the verdict holds and the two Betti tables agree.
    pub fn certified(&self) -> bool {
        self.verdict && self.cover_betti.betti_numbers() == self.topology_betti.betti_numbers()
    }

    /// Intersections that are not acyclic.
    pub fn witnesses(&self) -> impl Iterator<Item = &IntersectionCheck> {
        self.intersections.iter().filter(|c| !c.acyclic)
    }
}

/// Checks every nonempty intersection of cover members for acyclicity (cohomology of the
/// restricted sheaf vanishing in degrees `1..=max_degree`), and compares the cover's Čech
/// cohomology with the cohomology of the whole topology.
pub fn leray_check(sheaf: &Sheaf, cover: &Cover, max_degree: usize) -> Result<LerayReport> {
    let cover_betti = betti(sheaf, cover, max_degree)?;
    let t = sheaf.topology();
    let mut intersections: Vec<IntersectionCheck> = Vec::new();
    for level in nerve(t, cover, cover.len().saturating_sub(1)) {
        for (indices, open) in level {
            if intersections.iter().any(|c| c.open == open) {
                continue;
            }
            let b = PosetComplex::build(sheaf, open, max_degree)?.betti().betti_numbers();
            let acyclic = b.iter().skip(1).all(|&x| x == 0);
            intersections.push(IntersectionCheck { indices, open, betti: b, acyclic });
        }
    }
    let verdict = intersections.iter().all(|c| c.acyclic);
    let topology_betti = PosetComplex::build(sheaf, t.whole(), max_degree)?.betti();
    Ok(LerayReport { intersections, verdict, cover_betti, topology_betti })
}
