//! Pseudometric axioms for every kind of value space, alone and in weighted products.

use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use sheaf_core::spaces::{Factor, FactorKind, ValueSpace};

fn arb_kind() -> impl Strategy<Value = FactorKind> {
    prop_oneof![
        (1usize..=4).prop_map(FactorKind::Euclidean),
        Just(FactorKind::Circle),
        Just(FactorKind::GeoPosition2D),
        Just(FactorKind::GeoPosition3D),
        Just(FactorKind::Time),
        (1usize..=4).prop_map(|n| FactorKind::Discrete((0..n).map(|i| format!("l{i}")).collect())),
        (1usize..=4).prop_map(FactorKind::Simplex),
    ]
}

fn arb_space() -> impl Strategy<Value = ValueSpace> {
    prop::collection::vec((arb_kind(), 0.1f64..50.0), 1..=3).prop_map(|fs| {
        ValueSpace::from_factors(fs.into_iter().map(|(kind, weight)| Factor { weight, ..Factor::new(kind) }).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pseudometric_axioms(space in arb_space(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = space.sample(&mut rng);
        let y = space.sample(&mut rng);
        let z = space.sample(&mut rng);
        let d = |a, b| space.distance(a, b).unwrap();
        let (dxy, dyz, dxz) = (d(&x, &y), d(&y, &z), d(&x, &z));
        let tol = 1e-9 * (1.0 + dxy.max(dyz).max(dxz));
        prop_assert!(d(&x, &x).abs() <= tol);
        prop_assert!(dxy >= 0.0 && dyz >= 0.0 && dxz >= 0.0);
        prop_assert!((dxy - d(&y, &x)).abs() <= tol);
        prop_assert!(dxz <= dxy + dyz + tol, "{dxz} > {dxy} + {dyz}");
    }

    #[test]
    fn circle_distance_ignores_full_turns(a in -720.0f64..720.0, b in -720.0f64..720.0, turns in -3i32..3) {
        let c = ValueSpace::circle();
        let shifted = a + 360.0 * turns as f64;
        prop_assert!((c.dist(&[a], &[b]) - c.dist(&[shifted], &[b])).abs() <= 1e-9);
        prop_assert!(c.dist(&[a], &[b]) <= 180.0 + 1e-9);
    }
}
