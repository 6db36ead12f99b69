//! Coboundaries square to zero, degree-0 cohomology counts global sections, and lifted
//! maps are column stochastic.

mod common;

use common::{arb_recipe, oracle_rank};
use proptest::prelude::*;
use sheaf_core::cohomology::{
    betti, build_complex, global_sections_via_h0, lift_map, stochastic_lift, Binning, Cover, PosetComplex,
};
use sheaf_core::sheaf::Sheaf;
use sheaf_core::spaces::ValueSpace;

/// Dimension of the space of families `(x_U)` over every nonempty open with
/// `x_V = R(U→V) x_U` for all `V ⊂ U`, solved directly from the stacked constraints.
fn brute_force_sections(s: &Sheaf) -> usize {
    let t = s.topology();
    let opens: Vec<_> = t.nonempty_ids().collect();
    let mut offsets = Vec::new();
    let mut n = 0;
    for &o in &opens {
        offsets.push(n);
        n += s.stalk(o).dim();
    }
    let mut rows = Vec::new();
    for (i, &u) in opens.iter().enumerate() {
        for (j, &v) in opens.iter().enumerate() {
            if u == v || !t.is_subset(v, u) {
                continue;
            }
            let m = s.linear_matrix(u, v).unwrap();
            for r in 0..m.rows() {
                let mut row = vec![0.0; n];
                for c in 0..m.cols() {
                    row[offsets[i] + c] = m[(r, c)];
                }
                row[offsets[j] + r] -= 1.0;
                rows.push(row);
            }
        }
    }
    n - oracle_rank(rows, n)
}

fn random_cover(s: &Sheaf, picks: &[bool]) -> Cover {
    let t = s.topology();
    let mut sets: Vec<_> = t.nonempty_ids().zip(picks.iter().cycle()).filter(|(_, p)| **p).map(|(id, _)| id).collect();
    let covered = sets.iter().fold(0u64, |acc, id| acc | t.set(*id).bits());
    if covered != t.set(t.whole()).bits() && !sets.contains(&t.whole()) {
        sets.push(t.whole());
    }
    Cover::new(t, sets).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn coboundaries_square_to_zero(recipe in arb_recipe(4), picks in prop::collection::vec(any::<bool>(), 16)) {
        let s = recipe.build();
        let cover = random_cover(&s, &picks);
        let c = build_complex(&s, &cover, 3).unwrap();
        prop_assert!(c.dd_residual() <= 1e-10, "{}", c.dd_residual());
        let p = PosetComplex::build(&s, s.topology().whole(), 3).unwrap();
        prop_assert!(p.dd_residual() <= 1e-10);
        for k in 0..=3 {
            prop_assert!(c.betti().rows[k].betti <= c.cochain_dim(k));
        }
    }

    #[test]
    fn degree_zero_counts_global_sections(recipe in arb_recipe(3)) {
        let s = recipe.build();
        prop_assume!(s.topology().nonempty_ids().count() <= 6);
        let expected = brute_force_sections(&s);
        prop_assert_eq!(global_sections_via_h0(&s).unwrap().cols(), expected);
        let all = betti(&s, &Cover::all_opens(s.topology()), 1).unwrap();
        prop_assert_eq!(all.betti_numbers()[0], expected);
        // these sheaves glue, so the subbase already sees every global section
        let sub = betti(&s, &Cover::subbase(s.topology()), 1).unwrap();
        prop_assert_eq!(sub.betti_numbers()[0], expected);
    }

    #[test]
    fn lifted_functions_are_stochastic(
        targets in prop::collection::vec(0usize..7, 1..40),
        codomain in 7usize..10,
    ) {
        let m = stochastic_lift(|i| targets.get(i).copied(), targets.len(), codomain).unwrap();
        for i in 0..targets.len() {
            let col: Vec<f64> = (0..codomain).map(|j| m[(j, i)]).collect();
            prop_assert!((col.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(col.iter().all(|v| *v >= 0.0));
            // a delta at bin i goes to the delta at its image
            prop_assert_eq!(col[targets[i]], 1.0);
        }
    }

    #[test]
    fn lifted_maps_are_stochastic(bins in 2usize..6, samples in 1usize..4, a in -2.0f64..2.0, b in -3.0f64..3.0) {
        let domain = ValueSpace::euclidean(2).bounded(vec![(-1.0, 1.0); 2]);
        let codomain = ValueSpace::euclidean(1).bounded(vec![(-3.0, 3.0)]);
        let m = lift_map(
            |x: &[f64]| vec![a * x[0] + b * x[1] * x[1]],
            &Binning::new(&domain, bins).unwrap(),
            &Binning::new(&codomain, bins).unwrap(),
            samples,
        )
        .unwrap();
        prop_assert!(m.min_value() >= 0.0);
        for s in m.column_sums() {
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }
    }
}
