//! Two cameras looking past an obstacle.
//!
//! Entities: the left view `L`, the right view `R`, and the two regions `V1` (above the
//! obstacle) and `V2` (below it) seen by both cameras. The sensor domains are
//! `U_L = {L, V1, V2}`, `U_R = {R, V1, V2}`, `{V1}` and `{V2}`, so `U_L ∩ U_R` has two
//! components.
//!
//! Two sheaves live on this space:
//!
//! * the mosaic `𝓜`, with raw RGB pixel vectors (`m`, `n` pixels per image, `p` above and
//!   `q` below the obstacle in the shared region), restricted by cropping;
//! * the summary `𝒫`, where each image contributes a `(side, middle)` pair and each shared
//!   region sees only the middle value.

use alloc::format;
use alloc::vec;

use crate::cohomology::Cover;
use crate::linalg::Matrix;
use crate::sheaf::{MapBody, Sheaf, SheafBuilder};
use crate::spaces::ValueSpace;
use crate::topology::{generate_topology, EntityUniverse, Topology};
use crate::{Error, Result};

const CHANNELS: usize = 3;

/// Pixel counts for the mosaic sheaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObstacleParams {
    /// Pixels in the left image.
    pub m: usize,
    /// Pixels in the right image.
    pub n: usize,
    /// Shared pixels above the obstacle.
    pub p: usize,
    /// Shared pixels below the obstacle.
    pub q: usize,
}

impl Default for ObstacleParams {
    fn default() -> Self {
        Self { m: 4, n: 4, p: 2, q: 2 }
    }
}

fn obstacle_topology() -> Result<Topology> {
    let u = EntityUniverse::new(["L", "R", "V1", "V2"])?;
    generate_topology(u, &[vec!["L", "V1", "V2"], vec!["R", "V1", "V2"], vec!["V1"], vec!["V2"]])
}

fn shared_maps(b: &mut SheafBuilder, upper: usize, lower: usize) -> Result<()> {
    b.restriction_named(&["V1", "V2"], &["V1"], MapBody::Projection((0..upper).collect()))?;
    b.restriction_named(&["V1", "V2"], &["V2"], MapBody::Projection((upper..upper + lower).collect()))?;
    Ok(())
}

fn mosaic(params: ObstacleParams) -> Result<Sheaf> {
    let ObstacleParams { m, n, p, q } = params;
    if p == 0 || q == 0 || m < p + q || n < p + q {
        return Err(Error::InvalidOptions(format!(
            "pixel counts need 0 < p, 0 < q and p + q <= min(m, n); got m={m} n={n} p={p} q={q}"
        )));
    }
    let (up, low) = (CHANNELS * p, CHANNELS * q);
    let mut b = SheafBuilder::new(obstacle_topology()?);
    b.stalk_named(&["L", "V1", "V2"], ValueSpace::euclidean(CHANNELS * m))?;
    b.stalk_named(&["R", "V1", "V2"], ValueSpace::euclidean(CHANNELS * n))?;
    b.stalk_named(&["V1", "V2"], ValueSpace::euclidean(up + low))?;
    b.stalk_named(&["V1"], ValueSpace::euclidean(up))?;
    b.stalk_named(&["V2"], ValueSpace::euclidean(low))?;
    // both images store their shared pixels first: the upper block, then the lower block
    let crop = MapBody::Projection((0..up + low).collect());
    b.restriction_named(&["L", "V1", "V2"], &["V1", "V2"], crop.clone())?;
    b.restriction_named(&["R", "V1", "V2"], &["V1", "V2"], crop)?;
    shared_maps(&mut b, up, low)?;
    b.build()
}

fn summary() -> Result<Sheaf> {
    let mut b = SheafBuilder::new(obstacle_topology()?);
    b.stalk_named(&["L", "V1", "V2"], ValueSpace::euclidean(2))?;
    b.stalk_named(&["R", "V1", "V2"], ValueSpace::euclidean(2))?;
    b.stalk_named(&["V1", "V2"], ValueSpace::euclidean(2))?;
    b.stalk_named(&["V1"], ValueSpace::euclidean(1))?;
    b.stalk_named(&["V2"], ValueSpace::euclidean(1))?;
    let middle = Matrix::from_rows(&[[0.0, 1.0], [0.0, 1.0]], 2);
    b.restriction_named(&["L", "V1", "V2"], &["V1", "V2"], MapBody::Linear(middle.clone()))?;
    b.restriction_named(&["R", "V1", "V2"], &["V1", "V2"], MapBody::Linear(middle))?;
    shared_maps(&mut b, 1, 1)?;
    b.build()
}

/// Builds the mosaic sheaf `𝓜` and the summary sheaf `𝒫`.
pub fn build_obstacle_sheaves(params: ObstacleParams) -> Result<(Sheaf, Sheaf)> {
    Ok((mosaic(params)?, summary()?))
}

/// The two-camera cover `{U_L, U_R}`.
pub fn obstacle_cover(topology: &Topology) -> Result<Cover> {
    Cover::from_keys(topology, &["L+V1+V2", "R+V1+V2"])
}

/// The sheaf restricted to the shared region `{V1, V2}`, with the refined cover
/// `{{V1, V2}, {V1}, {V2}}` of that subspace.
pub fn overlap_refinement(sheaf: &Sheaf) -> Result<(Sheaf, Cover)> {
    let shared = sheaf.topology().open_by_key("V1+V2")?;
    let (restricted, _) = sheaf.restricted_to(shared)?;
    let cover = Cover::from_keys(restricted.topology(), &["V1+V2", "V1", "V2"])?;
    Ok((restricted, cover))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::betti;

    #[test]
    fn summary_has_three_global_parameters() {
        let (_, p) = build_obstacle_sheaves(ObstacleParams::default()).unwrap();
        assert_eq!(p.stalk(p.topology().whole()).dim(), 3);
        let b = betti(&p, &obstacle_cover(p.topology()).unwrap(), 1).unwrap();
        assert_eq!(b.betti_numbers(), vec![3, 1]);
    }

    #[test]
    fn refined_covers_are_acyclic() {
        let (m, p) = build_obstacle_sheaves(ObstacleParams::default()).unwrap();
        for s in [&m, &p] {
            let (r, cover) = overlap_refinement(s).unwrap();
            let b = betti(&r, &cover, 2).unwrap().betti_numbers();
            assert!(b[1..].iter().all(|&x| x == 0), "{b:?}");
        }
    }

    #[test]
    fn mosaic_dimensions_follow_parameters() {
        let params = ObstacleParams { m: 5, n: 6, p: 1, q: 3 };
        let (m, _) = build_obstacle_sheaves(params).unwrap();
        let t = m.topology();
        assert_eq!(m.stalk(t.open_by_key("V1+V2").unwrap()).dim(), 12);
        assert_eq!(m.stalk(t.whole()).dim(), 3 * (5 + 6 - 4));
        assert!(build_obstacle_sheaves(ObstacleParams { m: 2, n: 4, p: 2, q: 2 }).is_err());
    }
}
