//! Sheaves of pseudometric spaces on a finite topology.
//!
//! A sheaf is declared on a sub-family of opens that must include every basis open. The
//! user supplies a stalk for each declared open and a restriction map for each covering
//! inclusion between declared opens. [`SheafBuilder::build`] completes every other open as
//! the pullback of the declared opens it contains:
//!
//! * for a linear sheaf, the pullback is the kernel of the agreement constraints, stored as
//!   `ℝᵏ` together with an orthonormal embedding into the product of the components;
//! * otherwise it is the product of the component stalks, and the agreement of the
//!   components on their overlaps is checked when values are attached to the open.
//!
//! Restrictions between arbitrary nested opens are composed on demand along a canonical
//! path of declared maps. Nothing is cached inside the sheaf, so it can be shared freely
//! between threads; callers that evaluate the same restriction often keep the
//! [`RestrictionMap`] returned by [`Sheaf::compose`].

mod map;
mod verify;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use map::{
    Block, Builtin, BuiltinDef, BuiltinFn, Catalog, MapBody, ParamSpec, RestrictionMap, DEAD_RECKON, POINT_BEARING,
    TRACK_BEARING,
};
pub use verify::{FunctorialityReport, GluingPair, GluingReport, PathDiscrepancy, FUNCTORIALITY_TOLERANCE};

use crate::linalg::Matrix;
use crate::spaces::{Point, ValueSpace};
use crate::topology::{OpenId, Topology};
use crate::{Error, Result};

/// Tolerance on the agreement residual of values attached to completed (pullback) stalks.
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;

/// Stalks and restriction maps declared by the user, before completion.
#[derive(Debug, Clone)]
pub struct SheafBuilder {
    topology: Topology,
    stalks: BTreeMap<OpenId, ValueSpace>,
    maps: BTreeMap<(OpenId, OpenId), MapBody>,
}

impl SheafBuilder {
    /// Empty declaration on a topology.
    pub fn new(topology: Topology) -> Self {
        Self { topology, stalks: BTreeMap::new(), maps: BTreeMap::new() }
    }

    /// The topology.
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Declares the stalk of an open.
    pub fn stalk(&mut self, open: OpenId, space: ValueSpace) -> &mut Self {
        self.stalks.insert(open, space);
        self
    }

    /// Declares the stalk of the open with the given member names.
    pub fn stalk_named<S: AsRef<str>>(&mut self, names: &[S], space: ValueSpace) -> Result<&mut Self> {
        let id = self.topology.open_by_names(names)?;
        Ok(self.stalk(id, space))
    }

    /// Declares the restriction from `from` to `to`.
    pub fn restriction(&mut self, from: OpenId, to: OpenId, body: MapBody) -> &mut Self {
        self.maps.insert((from, to), body);
        self
    }

    /// Declares a restriction between opens given by member names.
    pub fn restriction_named<S: AsRef<str>>(&mut self, from: &[S], to: &[S], body: MapBody) -> Result<&mut Self> {
        let f = self.topology.open_by_names(from)?;
        let t = self.topology.open_by_names(to)?;
        Ok(self.restriction(f, t, body))
    }

    /// Completes the declaration into a sheaf. Same as [`complete_unions`].
    pub fn build(self) -> Result<Sheaf> {
        complete_unions(self)
    }
}

/// A sheaf with a stalk on every open.
#[derive(Debug, Clone)]
pub struct Sheaf {
    topology: Topology,
    stalks: Vec<ValueSpace>,
    declared: Vec<bool>,
    components: Vec<Vec<OpenId>>,
    offsets: Vec<Vec<usize>>,
    embeddings: Vec<Option<Matrix>>,
    maps: BTreeMap<(OpenId, OpenId), MapBody>,
    children: Vec<Vec<OpenId>>,
    linear: bool,
}

/// Completes a declared sheaf: checks the declaration and builds pullback stalks for every
/// undeclared open.
///
/// Fails with [`Error::MissingIntersectionStalk`] when a basis open has no stalk,
/// [`Error::MissingRestriction`] or [`Error::NotHasseEdge`] when the declared maps do not
/// match the covering inclusions of declared opens, and [`Error::SpaceMismatch`] when a map
/// does not fit its stalks.
pub fn complete_unions(partial: SheafBuilder) -> Result<Sheaf> {
    let SheafBuilder { topology, stalks: declared_stalks, maps } = partial;
    let n = topology.len();
    let key = |id: OpenId| topology.key(id);

    let mut declared = vec![false; n];
    let mut stalks: Vec<ValueSpace> = vec![ValueSpace::euclidean(0); n];
    for (open, space) in declared_stalks {
        if open == topology.empty() {
            if space.dim() != 0 {
                return Err(Error::SpaceMismatch("the empty set must have a zero-dimensional stalk".into()));
            }
            continue;
        }
        declared[open.index()] = true;
        stalks[open.index()] = space;
    }
    for b in topology.basis() {
        let id = topology.id_of(*b).expect("basis sets are open");
        if !declared[id.index()] {
            return Err(Error::MissingIntersectionStalk(key(id)));
        }
    }

    let declared_ids: Vec<OpenId> = topology.nonempty_ids().filter(|id| declared[id.index()]).collect();
    let mut children: Vec<Vec<OpenId>> = vec![Vec::new(); n];
    for &u in &declared_ids {
        let below: Vec<OpenId> = declared_ids.iter().copied().filter(|&v| v != u && topology.is_subset(v, u)).collect();
        children[u.index()] = maximal(&topology, &below);
    }
    for &u in &declared_ids {
        for &c in &children[u.index()] {
            if !maps.contains_key(&(u, c)) {
                return Err(Error::MissingRestriction { from: key(u), to: key(c) });
            }
        }
    }
    for ((from, to), body) in &maps {
        if !declared[from.index()] || !children[from.index()].contains(to) {
            return Err(Error::NotHasseEdge { from: key(*from), to: key(*to) });
        }
        let out = body.output_dim(stalks[from.index()].dim()).map_err(|e| match e {
            Error::SpaceMismatch(m) => Error::SpaceMismatch(format!("restriction {} -> {}: {m}", key(*from), key(*to))),
            other => other,
        })?;
        if out != stalks[to.index()].dim() {
            return Err(Error::SpaceMismatch(format!(
                "restriction {} -> {} produces {out} coordinates, the stalk has {}",
                key(*from),
                key(*to),
                stalks[to.index()].dim()
            )));
        }
    }

    let linear =
        declared_ids.iter().all(|id| stalks[id.index()].is_euclidean()) && maps.values().all(MapBody::is_linear);

    let mut sheaf = Sheaf {
        components: vec![Vec::new(); n],
        offsets: vec![Vec::new(); n],
        embeddings: vec![None; n],
        topology,
        stalks,
        declared,
        maps,
        children,
        linear,
    };
    for &u in &declared_ids {
        sheaf.components[u.index()] = vec![u];
        sheaf.offsets[u.index()] = vec![0];
    }
    let all: Vec<OpenId> = sheaf.topology.nonempty_ids().collect();
    for w in all {
        if sheaf.declared[w.index()] {
            continue;
        }
        let inside: Vec<OpenId> = declared_ids.iter().copied().filter(|&v| sheaf.topology.is_subset(v, w)).collect();
        let comps = maximal(&sheaf.topology, &inside);
        let mut offsets = Vec::with_capacity(comps.len());
        let mut off = 0;
        for c in &comps {
            offsets.push(off);
            off += sheaf.stalks[c.index()].dim();
        }
        sheaf.components[w.index()] = comps.clone();
        sheaf.offsets[w.index()] = offsets.clone();
        if sheaf.linear {
            let mut rows: Vec<Matrix> = Vec::new();
            for (i, &ci) in comps.iter().enumerate() {
                for (j, &cj) in comps.iter().enumerate().skip(i + 1) {
                    let inter = sheaf.topology.set(ci).intersection(sheaf.topology.set(cj));
                    if inter.is_empty() {
                        continue;
                    }
                    let iid = sheaf.topology.id_of(inter).expect("intersections of opens are open");
                    let ri = sheaf.linear_matrix(ci, iid)?;
                    let rj = sheaf.linear_matrix(cj, iid)?;
                    let mut row = Matrix::zeros(ri.rows(), off);
                    row.set_block(0, offsets[i], &ri);
                    row.set_block(0, offsets[j], &rj.scaled(-1.0));
                    rows.push(row);
                }
            }
            let constraints = Matrix::vstack(off, &rows);
            let basis = constraints.nullspace();
            sheaf.stalks[w.index()] = ValueSpace::euclidean(basis.cols());
            sheaf.embeddings[w.index()] = Some(basis);
        } else {
            sheaf.stalks[w.index()] = ValueSpace::product(comps.iter().map(|c| sheaf.stalks[c.index()].clone()));
        }
    }
    Ok(sheaf)
}

fn maximal(t: &Topology, opens: &[OpenId]) -> Vec<OpenId> {
    let mut out: Vec<OpenId> =
        opens.iter().copied().filter(|&v| !opens.iter().any(|&w| w != v && t.is_subset(v, w))).collect();
    out.sort_unstable();
    out
}

impl Sheaf {
    /// The topology.
    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Stalk of an open.
    pub fn stalk(&self, open: OpenId) -> &ValueSpace {
        &self.stalks[open.index()]
    }

    /// True when the stalk of `open` was declared rather than completed.
    pub fn is_declared(&self, open: OpenId) -> bool {
        self.declared[open.index()]
    }

    /// Declared opens whose stalks make up the stalk of `open` (just `open` when declared).
    pub fn components(&self, open: OpenId) -> &[OpenId] {
        &self.components[open.index()]
    }

    /// Embedding of a completed linear stalk into the product of its components.
    pub fn embedding(&self, open: OpenId) -> Option<&Matrix> {
        self.embeddings[open.index()].as_ref()
    }

    /// Declared restriction maps keyed by `(larger, smaller)`.
    pub fn declared_maps(&self) -> &BTreeMap<(OpenId, OpenId), MapBody> {
        &self.maps
    }

    /// Maximal declared opens strictly inside a declared open.
    pub fn declared_children(&self, open: OpenId) -> &[OpenId] {
        &self.children[open.index()]
    }

    /// True when every stalk is Euclidean and every map is linear.
    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// The declaration this sheaf was built from.
    pub fn to_builder(&self) -> SheafBuilder {
        let mut b = SheafBuilder::new(self.topology.clone());
        for id in self.topology.nonempty_ids() {
            if self.declared[id.index()] {
                b.stalk(id, self.stalks[id.index()].clone());
            }
        }
        for ((f, t), body) in &self.maps {
            b.restriction(*f, *t, body.clone());
        }
        b
    }

    /// A declaration that lists every nonempty open and every Hasse edge explicitly, using
    /// this sheaf's stalks and composed maps. Building it reproduces this sheaf.
    pub fn to_full_builder(&self) -> Result<SheafBuilder> {
        let mut b = SheafBuilder::new(self.topology.clone());
        for id in self.topology.nonempty_ids() {
            b.stalk(id, self.stalks[id.index()].clone());
        }
        for (u, v) in self.topology.hasse_edges() {
            b.restriction(u, v, self.compose(u, v)?.body);
        }
        Ok(b)
    }

    fn declared_path(&self, from: OpenId, to: OpenId) -> MapBody {
        let mut body = MapBody::Identity;
        let mut cur = from;
        while cur != to {
            let next = *self.children[cur.index()]
                .iter()
                .find(|&&c| self.topology.is_subset(to, c))
                .expect("declared opens below a declared open are reachable through its children");
            body = body.then(self.maps[&(cur, next)].clone());
            cur = next;
        }
        body
    }

    /// The restriction map from `from` to `to`, composed along canonical paths.
    pub fn compose(&self, from: OpenId, to: OpenId) -> Result<RestrictionMap> {
        let circular_outputs =
            self.stalks[to.index()].circular_mask().iter().enumerate().filter(|(_, c)| **c).map(|(i, _)| i).collect();
        let body = self.compose_body(from, to)?;
        Ok(RestrictionMap { from, to, body, circular_outputs })
    }

    fn compose_body(&self, from: OpenId, to: OpenId) -> Result<MapBody> {
        if from == to {
            return Ok(MapBody::Identity);
        }
        if !self.topology.is_subset(to, from) {
            return Err(Error::NotComparable { from: self.topology.key(from), to: self.topology.key(to) });
        }
        if to == self.topology.empty() {
            return Ok(MapBody::Projection(Vec::new()));
        }
        let mut body = match &self.embeddings[from.index()] {
            Some(b) => MapBody::Linear(b.clone()),
            None => MapBody::Identity,
        };
        let from_comps = &self.components[from.index()];
        let mut blocks = Vec::new();
        for &target in &self.components[to.index()] {
            let k = from_comps
                .iter()
                .position(|&c| self.topology.is_subset(target, c))
                .expect("components of a sub-open lie inside components of the larger open");
            let src = from_comps[k];
            blocks.push(map::Block {
                start: self.offsets[from.index()][k],
                len: self.stalks[src.index()].dim(),
                map: self.declared_path(src, target),
            });
        }
        let product_dim = match &self.embeddings[from.index()] {
            Some(b) => b.rows(),
            None => self.stalks[from.index()].dim(),
        };
        let gather = if blocks.len() == 1 && blocks[0].start == 0 && blocks[0].len == product_dim {
            blocks.pop().expect("one block").map
        } else {
            MapBody::Blocks(blocks)
        };
        body = body.then(gather);
        if let Some(b) = &self.embeddings[to.index()] {
            body = body.then(MapBody::Linear(b.transpose()));
        }
        Ok(body)
    }

    /// Restricts raw coordinates from `from` to `to`.
    pub fn restrict_coords(&self, from: OpenId, to: OpenId, value: &[f64]) -> Result<Vec<f64>> {
        let map = self.compose(from, to)?;
        if value.len() != self.stalks[from.index()].dim() {
            return Err(Error::SpaceMismatch(format!(
                "value has {} coordinates, stalk of `{}` has {}",
                value.len(),
                self.topology.key(from),
                self.stalks[from.index()].dim()
            )));
        }
        Ok(map.apply(value))
    }

    /// Restricts a point from `from` to `to`.
    pub fn restrict(&self, from: OpenId, to: OpenId, value: &Point) -> Result<Point> {
        let coords = self.restrict_coords(from, to, value)?;
        self.stalks[to.index()].point(coords)
    }

    /// Matrix of the restriction from `from` to `to` for a linear sheaf.
    pub fn linear_matrix(&self, from: OpenId, to: OpenId) -> Result<Matrix> {
        if !self.linear {
            return Err(Error::NonlinearSheaf);
        }
        self.compose_body(from, to)?.to_matrix(self.stalks[from.index()].dim())
    }

    /// Largest disagreement between the components of a completed stalk on their pairwise
    /// overlaps. Declared stalks, and completed linear stalks, always give 0.
    pub fn agreement_residual(&self, open: OpenId, value: &[f64]) -> Result<f64> {
        if self.declared[open.index()] || self.embeddings[open.index()].is_some() {
            return Ok(0.0);
        }
        let comps = &self.components[open.index()];
        let offs = &self.offsets[open.index()];
        let mut worst = 0.0f64;
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                let inter = self.topology.set(comps[i]).intersection(self.topology.set(comps[j]));
                if inter.is_empty() {
                    continue;
                }
                let iid = self.topology.id_of(inter).expect("intersections of opens are open");
                let si = &value[offs[i]..offs[i] + self.stalks[comps[i].index()].dim()];
                let sj = &value[offs[j]..offs[j] + self.stalks[comps[j].index()].dim()];
                let a = self.restrict_coords(comps[i], iid, si)?;
                let b = self.restrict_coords(comps[j], iid, sj)?;
                worst = worst.max(self.stalks[iid.index()].dist(&a, &b));
            }
        }
        Ok(worst)
    }

    /// The sheaf restricted to the subspace of opens contained in `open`.
    pub fn restricted_to(&self, open: OpenId) -> Result<(Sheaf, crate::topology::Subspace)> {
        let sub = self.topology.subspace(open);
        let mut b = SheafBuilder::new(sub.topology.clone());
        for id in sub.topology.nonempty_ids() {
            let parent = sub.to_parent[id.index()];
            if self.declared[parent.index()] {
                b.stalk(id, self.stalks[parent.index()].clone());
            }
        }
        for ((f, t), body) in &self.maps {
            if let (Some(sf), Some(st)) = (sub.from_parent(*f), sub.from_parent(*t)) {
                b.restriction(sf, st, body.clone());
            }
        }
        Ok((b.build()?, sub))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate_topology, EntityUniverse};

    fn chain() -> Sheaf {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(2)).unwrap();
        b.restriction_named(&["a", "b"], &["a"], MapBody::Projection(vec![0])).unwrap();
        b.build().unwrap()
    }

    /// Two overlapping opens with a one-dimensional overlap; the union is completed.
    fn overlap(ru: Matrix, rv: Matrix) -> Result<Sheaf> {
        let u = EntityUniverse::new(["p", "q", "r"]).unwrap();
        let t = generate_topology(u, &[vec!["p", "q"], vec!["q", "r"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["p", "q"], ValueSpace::euclidean(2))?;
        b.stalk_named(&["q", "r"], ValueSpace::euclidean(2))?;
        b.stalk_named(&["q"], ValueSpace::euclidean(1))?;
        b.restriction_named(&["p", "q"], &["q"], MapBody::Linear(ru))?;
        b.restriction_named(&["q", "r"], &["q"], MapBody::Linear(rv))?;
        b.build()
    }

    #[test]
    fn identity_restriction() {
        let s = chain();
        let x = s.topology().whole();
        let p = s.stalk(x).point(vec![1.0, 2.0]).unwrap();
        assert_eq!(s.restrict(x, x, &p).unwrap(), p);
        let a = s.topology().open_by_names(&["a"]).unwrap();
        assert_eq!(s.restrict(x, a, &p).unwrap().coords(), [1.0]);
        assert!(matches!(s.restrict(a, x, &p), Err(Error::NotComparable { .. })));
    }

    #[test]
    fn missing_basis_stalk() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(1)).unwrap();
        assert_eq!(b.build().unwrap_err(), Error::MissingIntersectionStalk("a".into()));
    }

    #[test]
    fn restriction_errors() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t.clone());
        b.stalk_named(&["a"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(2)).unwrap();
        assert!(matches!(b.clone().build(), Err(Error::MissingRestriction { .. })));
        b.restriction_named(&["a", "b"], &["a"], MapBody::Projection(vec![0, 1])).unwrap();
        assert!(matches!(b.clone().build(), Err(Error::SpaceMismatch(_))));
        b.restriction_named(&["a"], &["a", "b"], MapBody::Identity).unwrap();
        assert!(matches!(b.build(), Err(Error::NotHasseEdge { .. })));
    }

    #[test]
    fn linear_union_is_kernel() {
        let s = overlap(Matrix::from_rows(&[[0.0, 1.0]], 2), Matrix::from_rows(&[[1.0, 0.0]], 2)).unwrap();
        let x = s.topology().whole();
        assert!(!s.is_declared(x));
        assert_eq!(s.stalk(x).dim(), 3);
        let pq = s.topology().open_by_names(&["p", "q"]).unwrap();
        let qr = s.topology().open_by_names(&["q", "r"]).unwrap();
        let q = s.topology().open_by_names(&["q"]).unwrap();
        let a = s.linear_matrix(x, pq).unwrap();
        let b = s.linear_matrix(x, qr).unwrap();
        let ra = s.linear_matrix(pq, q).unwrap().mul(&a);
        let rb = s.linear_matrix(qr, q).unwrap().mul(&b);
        let diff = Matrix::vstack(3, &[ra, rb.scaled(-1.0)]);
        assert!(diff.row(0).iter().zip(diff.row(1)).all(|(x, y)| (x + y).abs() < 1e-12));
        assert_eq!(Matrix::vstack(3, &[a, b]).rank(), 3);
    }

    #[test]
    fn disjoint_union_is_product() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"], vec!["b"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::time()).unwrap();
        b.stalk_named(&["b"], ValueSpace::circle()).unwrap();
        let s = b.build().unwrap();
        let x = s.topology().whole();
        assert_eq!(s.stalk(x), &ValueSpace::product([ValueSpace::time(), ValueSpace::circle()]));
        let p = s.stalk(x).point(vec![2.0, 370.0]).unwrap();
        let bb = s.topology().open_by_names(&["b"]).unwrap();
        assert_eq!(s.restrict(x, bb, &p).unwrap().coords(), [10.0]);
    }

    #[test]
    fn nonlinear_pullback_agreement() {
        let u = EntityUniverse::new(["p", "q", "r"]).unwrap();
        let t = generate_topology(u, &[vec!["p", "q"], vec!["q", "r"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["p", "q"], ValueSpace::product([ValueSpace::circle(), ValueSpace::time()])).unwrap();
        b.stalk_named(&["q", "r"], ValueSpace::product([ValueSpace::circle(), ValueSpace::time()])).unwrap();
        b.stalk_named(&["q"], ValueSpace::time()).unwrap();
        b.restriction_named(&["p", "q"], &["q"], MapBody::Projection(vec![1])).unwrap();
        b.restriction_named(&["q", "r"], &["q"], MapBody::Projection(vec![1])).unwrap();
        let s = b.build().unwrap();
        let x = s.topology().whole();
        assert_eq!(s.stalk(x).dim(), 4);
        assert_eq!(s.agreement_residual(x, &[10.0, 1.0, 20.0, 1.0]).unwrap(), 0.0);
        assert_eq!(s.agreement_residual(x, &[10.0, 1.0, 20.0, 1.5]).unwrap(), 0.5);
    }

    #[test]
    fn full_builder_reproduces_stalk_dimensions() {
        let s = overlap(Matrix::from_rows(&[[0.0, 1.0]], 2), Matrix::from_rows(&[[1.0, 0.0]], 2)).unwrap();
        let again = s.to_full_builder().unwrap().build().unwrap();
        for id in s.topology().ids() {
            assert_eq!(s.stalk(id).dim(), again.stalk(id).dim());
        }
        let rebuilt = s.to_builder().build().unwrap();
        assert_eq!(rebuilt.embedding(s.topology().whole()), s.embedding(s.topology().whole()));
    }

    #[test]
    fn restricted_sheaf_keeps_declarations() {
        let s = overlap(Matrix::from_rows(&[[0.0, 1.0]], 2), Matrix::from_rows(&[[1.0, 0.0]], 2)).unwrap();
        let pq = s.topology().open_by_names(&["p", "q"]).unwrap();
        let (sub, map) = s.restricted_to(pq).unwrap();
        assert_eq!(sub.topology().len(), 3);
        assert_eq!(sub.stalk(sub.topology().whole()).dim(), 2);
        assert_eq!(map.to_parent[sub.topology().whole().index()], pq);
    }
}
