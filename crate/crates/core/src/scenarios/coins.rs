//! Two overlapping camera views of a pile of coins.
//!
//! Entities `left`, `mid` and `right`; the cameras see `{left, mid}` and `{mid, right}`.
//! Each camera stalk is an abstract detection vector: [`SLOTS`] detection slots, each a
//! count per coin type (penny, nickel, dime, quarter), the first [`SHARED_SLOTS`] of which
//! fall in the shared region. The three variants differ only in what the shared region
//! keeps.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::sheaf::{MapBody, Sheaf, SheafBuilder};
use crate::spaces::ValueSpace;
use crate::topology::{generate_topology, EntityUniverse};
use crate::Result;

/// Coin values in cents: penny, nickel, dime, quarter.
pub const COIN_VALUES: [f64; 4] = [1.0, 5.0, 10.0, 25.0];

/// Detection slots per camera.
pub const SLOTS: usize = 3;

/// Slots of each camera that fall in the shared region.
pub const SHARED_SLOTS: usize = 2;

const TYPES: usize = COIN_VALUES.len();

/// What the shared region stores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoinVariant {
    /// The raw shared detection slots.
    Mosaic,
    /// Coin counts per type.
    Counts,
    /// Total value in cents.
    Value,
}

/// Total value in cents of a count vector.
pub fn coin_value(counts: &[f64; 4]) -> f64 {
    counts.iter().zip(COIN_VALUES).map(|(c, v)| c * v).sum()
}

/// The counting map `f`: sums the shared slots per coin type.
fn counting_matrix() -> Matrix {
    let mut f = Matrix::zeros(TYPES, SLOTS * TYPES);
    for slot in 0..SHARED_SLOTS {
        for t in 0..TYPES {
            f[(t, slot * TYPES + t)] = 1.0;
        }
    }
    f
}

/// Builds the coin sheaf for one variant.
pub fn build_coin_sheaf(variant: CoinVariant) -> Result<Sheaf> {
    let u = EntityUniverse::new(["left", "mid", "right"])?;
    let t = generate_topology(u, &[vec!["left", "mid"], vec!["mid", "right"]])?;
    let mut b = SheafBuilder::new(t);
    let camera = ValueSpace::euclidean(SLOTS * TYPES);
    b.stalk_named(&["left", "mid"], camera.clone())?;
    b.stalk_named(&["mid", "right"], camera)?;
    let (shared, body) = match variant {
        CoinVariant::Mosaic => (SHARED_SLOTS * TYPES, MapBody::Projection((0..SHARED_SLOTS * TYPES).collect())),
        CoinVariant::Counts => (TYPES, MapBody::Linear(counting_matrix())),
        CoinVariant::Value => {
            let g = Matrix::from_rows(&[COIN_VALUES], TYPES);
            (1, MapBody::Linear(g.mul(&counting_matrix())))
        }
    };
    b.stalk_named(&["mid"], ValueSpace::euclidean(shared))?;
    b.restriction_named(&["left", "mid"], &["mid"], body.clone())?;
    b.restriction_named(&["mid", "right"], &["mid"], body)?;
    b.build()
}

/// Detection vector with the given per-slot counts; missing slots are zero.
pub fn detections(slots: &[[f64; 4]]) -> Vec<f64> {
    let mut v = vec![0.0; SLOTS * TYPES];
    for (i, s) in slots.iter().take(SLOTS).enumerate() {
        v[i * TYPES..(i + 1) * TYPES].copy_from_slice(s);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consistency::{consistency_radius, Assignment};

    #[test]
    fn value_map_prices_the_counts() {
        let s = build_coin_sheaf(CoinVariant::Value).unwrap();
        let t = s.topology();
        let x = detections(&[[3.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 2.0]]);
        let v = s.restrict_coords(t.open_by_key("left+mid").unwrap(), t.open_by_key("mid").unwrap(), &x).unwrap();
        assert_eq!(v, vec![58.0]);
        assert_eq!(coin_value(&[3.0, 1.0, 0.0, 2.0]), 58.0);
    }

    #[test]
    fn agreeing_views_glue() {
        for variant in [CoinVariant::Mosaic, CoinVariant::Counts, CoinVariant::Value] {
            let s = build_coin_sheaf(variant).unwrap();
            assert!(s.verify_gluing().unwrap().passed());
            let t = s.topology();
            let shared = [[1.0, 0.0, 2.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
            let left = detections(&[shared[0], shared[1], [4.0, 0.0, 0.0, 0.0]]);
            let right = detections(&[shared[0], shared[1], [0.0, 0.0, 0.0, 7.0]]);
            let mut a = Assignment::new(&s);
            a.set(t.open_by_key("left+mid").unwrap(), left).unwrap();
            a.set(t.open_by_key("mid+right").unwrap(), right).unwrap();
            assert!(consistency_radius(&a).unwrap().radius <= 1e-12);
        }
    }

    #[test]
    fn conflicting_counts_measure_their_distance() {
        let s = build_coin_sheaf(CoinVariant::Counts).unwrap();
        let t = s.topology();
        let mut a = Assignment::new(&s);
        a.set(t.open_by_key("left+mid").unwrap(), detections(&[[3.0, 1.0, 0.0, 2.0]])).unwrap();
        a.set(t.open_by_key("mid+right").unwrap(), detections(&[[3.0, 1.0, 0.0, 0.0]])).unwrap();
        a.set(t.open_by_key("mid").unwrap(), vec![3.0, 1.0, 0.0, 2.0]).unwrap();
        let r = consistency_radius(&a).unwrap().radius;
        assert!((r - 2.0).abs() < 1e-12);
    }
}
