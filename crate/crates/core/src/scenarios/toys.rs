//! Small sheaves with known cohomology and gluing behaviour.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::basis_children;
use crate::linalg::Matrix;
use crate::sheaf::{MapBody, Sheaf, SheafBuilder};
use crate::spaces::ValueSpace;
use crate::topology::{generate_topology, EntitySet, EntityUniverse, Topology};
use crate::{Error, Result};

/// Connected components of an open set, as entity sets in order of their smallest entity.
fn components(topology: &Topology, set: EntitySet) -> Vec<EntitySet> {
    let mut comps: Vec<EntitySet> = Vec::new();
    for e in set.iter() {
        let local = topology.set(topology.minimal_open(e));
        let mut merged = local;
        comps.retain(|c| {
            if c.intersection(local).is_empty() {
                true
            } else {
                merged = merged.union(*c);
                false
            }
        });
        comps.push(merged);
    }
    comps.sort_by_key(|c| c.iter().next());
    comps
}

/// The sheaf of locally constant `ℝᵈ`-valued functions: each basis open gets one copy of
/// `ℝᵈ` per connected component, and restrictions copy a component's value to the
/// components inside it. Opens outside the basis are completed.
pub fn locally_constant_sheaf(topology: Topology, d: usize) -> Result<Sheaf> {
    if d == 0 {
        return Err(Error::InvalidOptions(String::from("stalk dimension must be positive")));
    }
    let basis: Vec<EntitySet> = topology.basis().iter().copied().filter(|b| !b.is_empty()).collect();
    let mut b = SheafBuilder::new(topology);
    for &set in &basis {
        let id = b.topology().id_of(set).expect("basis sets are open");
        let n = components(b.topology(), set).len();
        b.stalk(id, ValueSpace::euclidean(n * d));
    }
    for &set in &basis {
        let from = components(b.topology(), set);
        for child in basis_children(b.topology(), set) {
            let to = components(b.topology(), child);
            let mut m = Matrix::zeros(to.len() * d, from.len() * d);
            for (i, c) in to.iter().enumerate() {
                let j = from.iter().position(|f| c.is_subset(*f)).expect("component lies in a component");
                for k in 0..d {
                    m[(i * d + k, j * d + k)] = 1.0;
                }
            }
            let (f, t) = (b.topology().id_of(set).expect("open"), b.topology().id_of(child).expect("open"));
            b.restriction(f, t, MapBody::Linear(m));
        }
    }
    b.build()
}

/// Constant `ℝ` on a ring of `k ≥ 3` arcs `U_i = {b_{i-1}, a_i, b_i}` overlapping in the
/// points `b_i`. Its cohomology is that of a circle.
pub fn circle_sheaf(k: usize) -> Result<Sheaf> {
    if k < 3 {
        return Err(Error::InvalidOptions(format!("a ring needs at least 3 arcs, got {k}")));
    }
    let mut names: Vec<String> = Vec::with_capacity(2 * k);
    for i in 0..k {
        names.push(format!("a{i}"));
        names.push(format!("b{i}"));
    }
    let arcs: Vec<Vec<String>> =
        (0..k).map(|i| vec![format!("b{}", (i + k - 1) % k), format!("a{i}"), format!("b{i}")]).collect();
    let t = generate_topology(EntityUniverse::new(names)?, &arcs)?;
    locally_constant_sheaf(t, 1)
}

/// Constant `ℝ` on the suspension of the four-point pseudocircle.
///
/// The points `a, b` are open, `c, d` sit over both, and the suspension points `e, f` sit
/// over everything else. The space has the cohomology of a 2-sphere, while the open
/// `{a, b, c, d}` is itself a pseudocircle with `H¹ = ℝ`.
pub fn pseudocircle_suspension() -> Result<Sheaf> {
    let u = EntityUniverse::new(["a", "b", "c", "d", "e", "f"])?;
    let t = generate_topology(
        u,
        &[
            vec!["a"],
            vec!["b"],
            vec!["a", "b", "c"],
            vec!["a", "b", "d"],
            vec!["a", "b", "c", "d", "e"],
            vec!["a", "b", "c", "d", "f"],
        ],
    )?;
    locally_constant_sheaf(t, 1)
}

/// A sheaf on `{p, q, r}` whose single open cover `{p,q}, {q,r}` has a compatible pair
/// of local sections that is not the restriction of any global section.
pub fn gluing_counterexample() -> Result<Sheaf> {
    let u = EntityUniverse::new(["p", "q", "r"])?;
    let t = generate_topology(u, &[vec!["p", "q"], vec!["q", "r"]])?;
    let mut b = SheafBuilder::new(t);
    b.stalk_named(&["p", "q", "r"], ValueSpace::euclidean(1))?;
    b.stalk_named(&["p", "q"], ValueSpace::euclidean(2))?;
    b.stalk_named(&["q", "r"], ValueSpace::euclidean(1))?;
    b.stalk_named(&["q"], ValueSpace::euclidean(1))?;
    b.restriction_named(&["p", "q", "r"], &["p", "q"], MapBody::Linear(Matrix::from_rows(&[[1.0], [0.0]], 1)))?;
    b.restriction_named(&["p", "q", "r"], &["q", "r"], MapBody::Identity)?;
    b.restriction_named(&["p", "q"], &["q"], MapBody::Linear(Matrix::from_rows(&[[1.0, 1.0]], 2)))?;
    b.restriction_named(&["q", "r"], &["q"], MapBody::Identity)?;
    b.build()
}

/// Two sensors `{x, y}` and `{y}` reading `ℝ`, with the identity between them.
pub fn chain_sheaf() -> Result<Sheaf> {
    let u = EntityUniverse::new(["x", "y"])?;
    let t = generate_topology(u, &[vec!["x", "y"], vec!["y"]])?;
    let mut b = SheafBuilder::new(t);
    b.stalk_named(&["x", "y"], ValueSpace::euclidean(1))?;
    b.stalk_named(&["y"], ValueSpace::euclidean(1))?;
    b.restriction_named(&["x", "y"], &["y"], MapBody::Identity)?;
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudocircle_pair_has_two_components() {
        let s = pseudocircle_suspension().unwrap();
        let t = s.topology();
        assert_eq!(s.stalk(t.open_by_key("a+b").unwrap()).dim(), 2);
        assert_eq!(s.stalk(t.open_by_key("a+b+c").unwrap()).dim(), 1);
        assert!(s.verify_functoriality(8, 0).passed());
    }

    #[test]
    fn circle_requires_three_arcs() {
        assert!(circle_sheaf(2).is_err());
        let s = circle_sheaf(3).unwrap();
        assert_eq!(s.topology().basis().iter().filter(|b| !b.is_empty()).count(), 6);
    }

    #[test]
    fn counterexample_fails_gluing() {
        let s = gluing_counterexample().unwrap();
        assert!(!s.verify_gluing().unwrap().passed());
    }

    #[test]
    fn chain_is_linear() {
        assert!(chain_sheaf().unwrap().is_linear());
    }
}
