//! Random sheaf generators and independent linear-algebra oracles shared by the property suites.
#![allow(dead_code)]

use proptest::prelude::*;
use sheaf_core::linalg::Matrix;
use sheaf_core::scenarios::locally_constant_sheaf;
use sheaf_core::sheaf::{MapBody, Sheaf, SheafBuilder};
use sheaf_core::spaces::ValueSpace;
use sheaf_core::topology::{EntitySet, EntityUniverse, Topology, DEFAULT_OPEN_CAP};

/// Topology on `n` entities named `e0…` generated by the given bit masks.
pub fn topology_from_masks(n: usize, masks: &[u64], with_whole: bool) -> Topology {
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let full = (1u64 << n) - 1;
    let mut sets: Vec<EntitySet> = masks.iter().map(|m| EntitySet::from_bits(m & full)).collect();
    if with_whole {
        sets.push(EntitySet::from_bits(full));
    }
    Topology::generate(EntityUniverse::new(names).unwrap(), &sets, DEFAULT_OPEN_CAP).unwrap()
}

fn children(t: &Topology, set: EntitySet) -> Vec<EntitySet> {
    let inside: Vec<EntitySet> =
        t.basis().iter().copied().filter(|b| !b.is_empty() && b.is_strict_subset(set)).collect();
    inside.iter().copied().filter(|b| !inside.iter().any(|c| b.is_strict_subset(*c))).collect()
}

/// Each entity owns a block of `k[e]` coordinates; the stalk on a basis open is the
/// concatenation of its entities' blocks, rescaled coordinate-wise by nonzero factors drawn
/// from `scales`. Restrictions undo the larger open's scaling, drop coordinates and apply
/// the smaller open's scaling, so any two composition paths agree.
pub fn block_sheaf(t: Topology, k: &[usize], scales: &[f64]) -> Sheaf {
    let mut next = 0usize;
    let mut draw = || {
        let s = scales[next % scales.len()];
        next += 1;
        s
    };
    let basis: Vec<EntitySet> = t.basis().iter().copied().filter(|b| !b.is_empty()).collect();
    // coordinate labels (entity, slot) and scale per basis open
    let coords =
        |set: EntitySet| -> Vec<(usize, usize)> { set.iter().flat_map(|e| (0..k[e]).map(move |j| (e, j))).collect() };
    let scale: Vec<Vec<f64>> = basis.iter().map(|b| coords(*b).iter().map(|_| draw()).collect()).collect();
    let mut b = SheafBuilder::new(t.clone());
    for (i, set) in basis.iter().enumerate() {
        b.stalk(t.id_of(*set).unwrap(), ValueSpace::euclidean(scale[i].len()));
    }
    for (i, set) in basis.iter().enumerate() {
        let from = coords(*set);
        for child in children(&t, *set) {
            let ci = basis.iter().position(|s| *s == child).unwrap();
            let to = coords(child);
            let mut m = Matrix::zeros(to.len(), from.len());
            for (r, c) in to.iter().enumerate() {
                let j = from.iter().position(|f| f == c).unwrap();
                m[(r, j)] = scale[ci][r] / scale[i][j];
            }
            b.restriction(t.id_of(*set).unwrap(), t.id_of(child).unwrap(), MapBody::Linear(m));
        }
    }
    b.build().unwrap()
}

/// Description of a random linear sheaf, kept so failures print something readable.
#[derive(Debug, Clone)]
pub struct SheafRecipe {
    pub n: usize,
    pub masks: Vec<u64>,
    pub with_whole: bool,
    pub locally_constant: Option<usize>,
    pub k: Vec<usize>,
    pub scales: Vec<f64>,
}

impl SheafRecipe {
    pub fn build(&self) -> Sheaf {
        let t = topology_from_masks(self.n, &self.masks, self.with_whole);
        match self.locally_constant {
            Some(d) => locally_constant_sheaf(t, d).unwrap(),
            None => block_sheaf(t, &self.k, &self.scales),
        }
    }
}

/// Random linear sheaves on up to `max_entities` entities.
pub fn arb_recipe(max_entities: usize) -> impl Strategy<Value = SheafRecipe> {
    (2..=max_entities)
        .prop_flat_map(|n| {
            let full = (1u64 << n) - 1;
            (
                Just(n),
                prop::collection::vec(1..=full, 1..=4),
                any::<bool>(),
                prop_oneof![Just(None), (1usize..=2).prop_map(Some)],
                prop::collection::vec(1usize..=2, n),
                prop::collection::vec(prop_oneof![0.5f64..2.0, -2.0f64..-0.5], 16),
            )
        })
        .prop_map(|(n, masks, with_whole, locally_constant, k, scales)| SheafRecipe {
            n,
            masks,
            with_whole,
            locally_constant,
            k,
            scales,
        })
}

/// Rank by Gaussian elimination with partial pivoting, on row-major data.
pub fn oracle_rank(mut rows: Vec<Vec<f64>>, cols: usize) -> usize {
    let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let tol = 1e-9 * scale * (rows.len().max(cols) as f64);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs())) else {
            break;
        };
        if rows[p][c].abs() <= tol {
            continue;
        }
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][c] / rows[rank][c];
                if f != 0.0 {
                    let pivot = rows[rank].clone();
                    for (x, p) in rows[r][c..cols].iter_mut().zip(&pivot[c..cols]) {
                        *x -= f * p;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}
