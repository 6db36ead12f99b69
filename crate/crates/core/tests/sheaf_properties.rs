//! Functoriality, consistency of pulled-back sections and the fusion lower bound.

mod common;

use common::{arb_recipe, block_sheaf, topology_from_masks};
use proptest::prelude::*;
use sheaf_core::consistency::{assignment_distance, consistency_radius, pullback_global, Assignment};
use sheaf_core::fusion::{fuse, FusionOptions};
use sheaf_core::linalg::Matrix;
use sheaf_core::scenarios::{build_sar_sheaf, SarParameters};
use sheaf_core::sheaf::{MapBody, SheafBuilder};
use sheaf_core::spaces::ValueSpace;

/// Diamond `X ⊃ {u,w}, {v,w} ⊃ {w}` with stalks built from per-entity blocks.
fn diamond(k: &[usize], scales: &[f64]) -> sheaf_core::sheaf::Sheaf {
    let t = topology_from_masks(3, &[0b101, 0b110], true);
    block_sheaf(t, k, scales)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn diamonds_are_path_independent(
        k in prop::collection::vec(1usize..=3, 3),
        scales in prop::collection::vec(prop_oneof![0.2f64..5.0, -5.0f64..-0.2], 32),
        seed in any::<u64>(),
    ) {
        let s = diamond(&k, &scales);
        let report = s.verify_functoriality(8, seed);
        prop_assert!(!report.checked.is_empty());
        prop_assert!(report.passed(), "{:?}", report.worst());
    }

    #[test]
    fn a_broken_diamond_is_caught(scale in 1.5f64..4.0) {
        let t = topology_from_masks(3, &[0b101, 0b110], true);
        let mut b = SheafBuilder::new(t);
        for key in ["e0+e1+e2", "e0+e2", "e1+e2", "e2"] {
            b.stalk_named(&key.split('+').collect::<Vec<_>>(), ValueSpace::euclidean(1)).unwrap();
        }
        b.restriction_named(&["e0", "e1", "e2"], &["e0", "e2"], MapBody::Identity).unwrap();
        b.restriction_named(&["e0", "e1", "e2"], &["e1", "e2"], MapBody::Identity).unwrap();
        b.restriction_named(&["e0", "e2"], &["e2"], MapBody::Identity).unwrap();
        b.restriction_named(&["e1", "e2"], &["e2"], MapBody::Linear(Matrix::from_rows(&[[scale]], 1))).unwrap();
        prop_assert!(!b.build().unwrap().verify_functoriality(4, 0).passed());
    }

    #[test]
    fn pulled_back_linear_sections_are_consistent(recipe in arb_recipe(4), coords in prop::collection::vec(-10.0f64..10.0, 16)) {
        let s = recipe.build();
        let x = s.topology().whole();
        let dim = s.stalk(x).dim();
        let top = s.stalk(x).point(coords.iter().cycle().take(dim).copied().collect()).unwrap();
        let a = pullback_global(&s, &top).unwrap();
        prop_assert!(consistency_radius(&a).unwrap().radius <= 1e-9);
    }

    #[test]
    fn pulled_back_sar_states_are_consistent(
        lon in -75.0f64..-60.0,
        lat in 40.0f64..46.0,
        alt in 8.0f64..14.0,
        ve in -600.0f64..600.0,
        vn in -600.0f64..600.0,
        t in 0.1f64..2.0,
    ) {
        let s = build_sar_sheaf(&SarParameters::default()).unwrap();
        let top = s.stalk(s.topology().whole()).point(vec![lon, lat, alt, ve, vn, t]).unwrap();
        let a = pullback_global(&s, &top).unwrap();
        prop_assert!(consistency_radius(&a).unwrap().radius <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fusion_respects_the_lipschitz_bound(
        recipe in arb_recipe(4),
        picks in prop::collection::vec(any::<bool>(), 16),
        values in prop::collection::vec(-5.0f64..5.0, 64),
    ) {
        let s = recipe.build();
        let t = s.topology();
        let mut a = Assignment::new(&s);
        let mut v = values.iter().cycle();
        for (id, pick) in t.nonempty_ids().zip(picks.iter().cycle()) {
            if *pick || id == t.whole() {
                let dim = s.stalk(id).dim();
                a.set(id, v.by_ref().take(dim).copied().collect()).unwrap();
            }
        }
        let opts = FusionOptions { restarts: 1, ..FusionOptions::default() };
        let r = fuse(&a, &opts).unwrap();
        let bound = r.lower_bound.expect("linear sheaves get a Lipschitz constant");
        let d = assignment_distance(&a, &r.fused).unwrap();
        prop_assert!(d >= bound - 1e-9, "distance {d} below bound {bound} (radius {}, K {:?})", r.radius, r.lipschitz);
    }
}
