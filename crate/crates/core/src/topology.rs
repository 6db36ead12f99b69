//! Finite topologies over named entities.
//!
//! Open sets are `u64` bitsets over an [`EntityUniverse`]. A [`Topology`] is generated from
//! a subbase of sensor domains and stores every open set in a canonical order together with
//! its Hasse diagram.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// Default cap on the number of open sets produced by [`Topology::generate`].
pub const DEFAULT_OPEN_CAP: usize = 4096;

/// Maximum number of entities in one universe.
pub const MAX_ENTITIES: usize = 64;

/// Ordered list of unique entity names. The position of a name is its bit index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityUniverse {
    names: Vec<String>,
}

impl EntityUniverse {
    /// Creates a universe. Names must be unique, non-empty and free of `+` and `,`.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_ENTITIES {
            return Err(Error::UniverseTooLarge(names.len()));
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if n.is_empty() || n.contains('+') || n.contains(',') || n.trim() != n {
                return Err(Error::InvalidEntityName(n.clone()));
            }
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateEntity(n.clone()));
            }
        }
        Ok(Self { names })
    }

    /// Number of entities.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// True when the universe has no entities.
    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Entity names in canonical order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Bit index of a name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// The set of all entities.
    pub fn full(&self) -> EntitySet {
        EntitySet::full(self.len())
    }

    /// Bitset for a list of names.
    pub fn set_of<S: AsRef<str>>(&self, names: &[S]) -> Result<EntitySet> {
        let mut set = EntitySet::EMPTY;
        for n in names {
            let n = n.as_ref();
            let i = self.index_of(n).ok_or_else(|| Error::UnknownEntity(n.to_string()))?;
            set = set.with(i);
        }
        Ok(set)
    }

    /// Canonical key of a set: member names sorted lexicographically and joined by `+`.
    /// The empty set has the empty key.
    pub fn key(&self, set: EntitySet) -> String {
        let mut members: Vec<&str> = set.iter().map(|i| self.names[i].as_str()).collect();
        members.sort_unstable();
        members.join("+")
    }

    /// Parses a key produced by [`EntityUniverse::key`] (member order is not significant).
    pub fn parse_key(&self, key: &str) -> Result<EntitySet> {
        if key.is_empty() {
            return Ok(EntitySet::EMPTY);
        }
        let parts: Vec<&str> = key.split('+').map(str::trim).collect();
        self.set_of(&parts)
    }
}

/// Bitset of entity indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EntitySet(u64);

impl EntitySet {
    /// The empty set.
    pub const EMPTY: EntitySet = EntitySet(0);

    /// Set from raw bits.
    pub const fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            Self(u64::MAX)
        } else {
            Self((1u64 << n) - 1)
        }
    }

    /// Raw bits.
    pub const fn bits(self) -> u64 {
        self.0
    }

    /// Copy with entity `i` added.
    pub fn with(self, i: usize) -> Self {
        Self(self.0 | (1u64 << i))
    }

    /// Membership test.
    pub fn contains(self, i: usize) -> bool {
        i < 64 && self.0 & (1u64 << i) != 0
    }

    /// Set union.
    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    /// Set intersection.
    pub fn intersection(self, other: Self) -> Self {
        Self(self.0 & other.0)
    }

    /// `self ⊆ other`.
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// `self ⊊ other`.
    pub fn is_strict_subset(self, other: Self) -> bool {
        self.is_subset(other) && self != other
    }

    /// Number of members.
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// True for the empty set.
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..64).filter(move |i| bits & (1u64 << i) != 0)
    }

    fn canonical_cmp(&self, other: &Self) -> core::cmp::Ordering {
        (self.len(), self.0).cmp(&(other.len(), other.0))
    }
}

impl fmt::Debug for EntitySet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Dense handle of an open set inside one [`Topology`].
///
/// Ids follow the canonical order: by cardinality, then by bit pattern. The empty set is
/// always id 0 and the whole space is always the last id.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct OpenId(pub(crate) usize);

impl OpenId {
    /// Position in the canonical order.
    pub fn index(self) -> usize {
        self.0
    }
}

/// A finite topology with its Hasse diagram.
#[derive(Debug, Clone)]
pub struct Topology {
    universe: EntityUniverse,
    subbase: Vec<EntitySet>,
    basis: Vec<EntitySet>,
    opens: Vec<EntitySet>,
    index: BTreeMap<EntitySet, OpenId>,
    covers: Vec<Vec<OpenId>>,
    covered_by: Vec<Vec<OpenId>>,
}

/// Convenience wrapper around [`Topology::generate`] taking names.
pub fn generate_topology<S: AsRef<str>>(universe: EntityUniverse, subbase: &[Vec<S>]) -> Result<Topology> {
    let sets = subbase.iter().map(|names| universe.set_of(names)).collect::<Result<Vec<_>>>()?;
    Topology::generate(universe, &sets, DEFAULT_OPEN_CAP)
}

impl Topology {
    /// Smallest topology containing `subbase`.
    ///
    /// The basis is the closure of the nonempty subbase members under pairwise intersection.
    /// Opens are all unions of basis sets plus `∅` and the whole space. Fails with
    /// [`Error::TopologyTooLarge`] as soon as more than `cap` opens would be produced.
    pub fn generate(universe: EntityUniverse, subbase: &[EntitySet], cap: usize) -> Result<Self> {
        let whole = universe.full();
        for s in subbase {
            if !s.is_subset(whole) {
                let stray = s.iter().find(|i| !whole.contains(*i)).unwrap_or(0);
                return Err(Error::UnknownEntity(alloc::format!("#{stray}")));
            }
        }
        let mut basis: BTreeSet<EntitySet> = subbase.iter().copied().filter(|s| !s.is_empty()).collect();
        loop {
            let current: Vec<EntitySet> = basis.iter().copied().collect();
            let mut grew = false;
            for (i, a) in current.iter().enumerate() {
                for b in &current[i + 1..] {
                    let c = a.intersection(*b);
                    if !c.is_empty() && basis.insert(c) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let mut basis: Vec<EntitySet> = basis.into_iter().collect();
        basis.sort_by(EntitySet::canonical_cmp);

        let mut opens: BTreeSet<EntitySet> = BTreeSet::new();
        opens.insert(EntitySet::EMPTY);
        opens.insert(whole);
        let mut queue = vec![EntitySet::EMPTY];
        while let Some(o) = queue.pop() {
            for b in &basis {
                let u = o.union(*b);
                if opens.insert(u) {
                    if opens.len() > cap {
                        return Err(Error::TopologyTooLarge { cap });
                    }
                    queue.push(u);
                }
            }
        }
        if opens.len() > cap {
            return Err(Error::TopologyTooLarge { cap });
        }
        Ok(Self::from_sorted(universe, subbase.to_vec(), basis, opens.into_iter().collect()))
    }

    fn from_sorted(
        universe: EntityUniverse,
        subbase: Vec<EntitySet>,
        basis: Vec<EntitySet>,
        mut opens: Vec<EntitySet>,
    ) -> Self {
        opens.sort_by(EntitySet::canonical_cmp);
        let index = opens.iter().enumerate().map(|(i, s)| (*s, OpenId(i))).collect();
        let n = opens.len();
        let mut covers: Vec<Vec<OpenId>> = vec![Vec::new(); n];
        let mut covered_by: Vec<Vec<OpenId>> = vec![Vec::new(); n];
        for u in 0..n {
            let big = opens[u];
            let mut accepted: Vec<usize> = Vec::new();
            for v in (0..u).rev() {
                let small = opens[v];
                if !small.is_strict_subset(big) {
                    continue;
                }
                if accepted.iter().any(|&c| small.is_subset(opens[c])) {
                    continue;
                }
                accepted.push(v);
            }
            accepted.sort_unstable();
            for &v in &accepted {
                covered_by[v].push(OpenId(u));
            }
            covers[u] = accepted.into_iter().map(OpenId).collect();
        }
        Self { universe, subbase, basis, opens, index, covers, covered_by }
    }

    /// The entity universe.
    pub fn universe(&self) -> &EntityUniverse {
        &self.universe
    }

    /// Subbase as supplied at generation time.
    pub fn subbase(&self) -> &[EntitySet] {
        &self.subbase
    }

    /// Intersection closure of the nonempty subbase members, in canonical order.
    pub fn basis(&self) -> &[EntitySet] {
        &self.basis
    }

    /// Number of open sets, including `∅` and the whole space.
    pub fn len(&self) -> usize {
        self.opens.len()
    }

    /// Always false: a topology contains at least the empty set.
    pub fn is_empty(&self) -> bool {
        self.opens.is_empty()
    }

    /// All open ids in canonical order.
    pub fn ids(&self) -> impl DoubleEndedIterator<Item = OpenId> + ExactSizeIterator {
        (0..self.opens.len()).map(OpenId)
    }

    /// Nonempty open ids in canonical order.
    pub fn nonempty_ids(&self) -> impl Iterator<Item = OpenId> + '_ {
        self.ids().filter(move |id| !self.opens[id.0].is_empty())
    }

    /// Member bitset of an open.
    pub fn set(&self, id: OpenId) -> EntitySet {
        self.opens[id.0]
    }

    /// Id of an open bitset, if it is open.
    pub fn id_of(&self, set: EntitySet) -> Option<OpenId> {
        self.index.get(&set).copied()
    }

    /// Id of the empty set.
    pub fn empty(&self) -> OpenId {
        OpenId(0)
    }

    /// Id of the whole space.
    pub fn whole(&self) -> OpenId {
        OpenId(self.opens.len() - 1)
    }

    /// `a ⊆ b` for open ids.
    pub fn is_subset(&self, a: OpenId, b: OpenId) -> bool {
        self.opens[a.0].is_subset(self.opens[b.0])
    }

    /// Canonical key of an open.
    pub fn key(&self, id: OpenId) -> String {
        self.universe.key(self.opens[id.0])
    }

    /// Looks an open up by key.
    pub fn open_by_key(&self, key: &str) -> Result<OpenId> {
        let set = self.universe.parse_key(key)?;
        self.id_of(set).ok_or_else(|| Error::NotOpen(key.to_string()))
    }

    /// Looks an open up by member names.
    pub fn open_by_names<S: AsRef<str>>(&self, names: &[S]) -> Result<OpenId> {
        let set = self.universe.set_of(names)?;
        self.id_of(set).ok_or_else(|| Error::NotOpen(self.universe.key(set)))
    }

    /// Opens covered by `id` in the Hasse diagram (maximal strict sub-opens), `∅` included.
    pub fn covers(&self, id: OpenId) -> &[OpenId] {
        &self.covers[id.0]
    }

    /// Opens covering `id` in the Hasse diagram.
    pub fn covered_by(&self, id: OpenId) -> &[OpenId] {
        &self.covered_by[id.0]
    }

    /// Hasse edges `(larger, smaller)` between nonempty opens.
    pub fn hasse_edges(&self) -> Vec<(OpenId, OpenId)> {
        let mut out = Vec::new();
        for u in self.ids() {
            for &v in &self.covers[u.0] {
                if !self.opens[v.0].is_empty() {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// All pairs `(smaller, larger)` of nonempty opens with `smaller ⊊ larger`, found by
    /// reachability in the Hasse diagram. Sorted by larger id, then smaller id.
    pub fn comparable_pairs(&self) -> Vec<(OpenId, OpenId)> {
        let mut out = Vec::new();
        let mut seen = vec![usize::MAX; self.len()];
        let mut stack = Vec::new();
        for u in self.nonempty_ids() {
            let mut below = Vec::new();
            stack.clear();
            stack.extend_from_slice(&self.covers[u.0]);
            while let Some(v) = stack.pop() {
                if seen[v.0] == u.0 {
                    continue;
                }
                seen[v.0] = u.0;
                if !self.opens[v.0].is_empty() {
                    below.push(v);
                }
                stack.extend_from_slice(&self.covers[v.0]);
            }
            below.sort_unstable();
            out.extend(below.into_iter().map(|v| (v, u)));
        }
        out
    }

    /// Smallest open containing entity `i`.
    pub fn minimal_open(&self, entity: usize) -> OpenId {
        self.ids().find(|id| self.opens[id.0].contains(entity)).unwrap_or_else(|| self.whole())
    }

    /// Distinct minimal opens of the entities, in canonical order.
    pub fn minimal_opens(&self) -> Vec<OpenId> {
        let set: BTreeSet<OpenId> = (0..self.universe.len()).map(|e| self.minimal_open(e)).collect();
        set.into_iter().collect()
    }

    /// The subspace topology on an open set, with entities renumbered in their original order.
    pub fn subspace(&self, open: OpenId) -> Subspace {
        let members: Vec<usize> = self.opens[open.0].iter().collect();
        let names: Vec<String> = members.iter().map(|&i| self.universe.names[i].clone()).collect();
        let universe = EntityUniverse { names };
        let compress = |s: EntitySet| {
            let mut out = EntitySet::EMPTY;
            for (k, &i) in members.iter().enumerate() {
                if s.contains(i) {
                    out = out.with(k);
                }
            }
            out
        };
        let outer = self.opens[open.0];
        let opens: Vec<EntitySet> = self.opens.iter().filter(|s| s.is_subset(outer)).map(|s| compress(*s)).collect();
        let basis: Vec<EntitySet> = self.basis.iter().filter(|s| s.is_subset(outer)).map(|s| compress(*s)).collect();
        let topology = Self::from_sorted(universe, basis.clone(), basis, opens);
        let to_parent = topology
            .opens
            .iter()
            .map(|s| {
                let mut bits = EntitySet::EMPTY;
                for k in s.iter() {
                    bits = bits.with(members[k]);
                }
                self.index[&bits]
            })
            .collect();
        Subspace { topology, to_parent }
    }
}

/// The subspace topology on an open set, linked back to the parent topology.
#[derive(Debug, Clone)]
pub struct Subspace {
    /// Topology of the subspace.
    pub topology: Topology,
    /// Parent id of each subspace open, indexed by subspace id.
    pub to_parent: Vec<OpenId>,
}

impl Subspace {
    /// Subspace id of a parent open contained in the subspace.
    pub fn from_parent(&self, parent: OpenId) -> Option<OpenId> {
        self.to_parent.iter().position(|p| *p == parent).map(OpenId)
    }
}

/// One violated topology axiom, with witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `∅` is not in the family.
    MissingEmpty,
    /// The whole space is not in the family.
    MissingWhole,
    /// `a ∪ b` is not in the family.
    UnionMissing {
        /// First member.
        a: EntitySet,
        /// Second member.
        b: EntitySet,
        /// The absent union.
        union: EntitySet,
    },
    /// `a ∩ b` is not in the family.
    IntersectionMissing {
        /// First member.
        a: EntitySet,
        /// Second member.
        b: EntitySet,
        /// The absent intersection.
        intersection: EntitySet,
    },
}

/// Result of [`verify_topology`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologyReport {
    /// Every violation found, in scan order.
    pub violations: Vec<Violation>,
}

impl TopologyReport {
    /// True when the family is a topology.
    pub fn is_topology(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks whether `family` is a topology on `whole`. For a finite family, closure under
/// pairwise unions and intersections is enough.
pub fn verify_topology(whole: EntitySet, family: &[EntitySet]) -> TopologyReport {
    let set: BTreeSet<EntitySet> = family.iter().copied().collect();
    let mut violations = Vec::new();
    if !set.contains(&EntitySet::EMPTY) {
        violations.push(Violation::MissingEmpty);
    }
    if !set.contains(&whole) {
        violations.push(Violation::MissingWhole);
    }
    let members: Vec<EntitySet> = set.iter().copied().collect();
    for (i, &a) in members.iter().enumerate() {
        for &b in &members[i + 1..] {
            let u = a.union(b);
            if !set.contains(&u) {
                violations.push(Violation::UnionMissing { a, b, union: u });
            }
            let n = a.intersection(b);
            if !set.contains(&n) {
                violations.push(Violation::IntersectionMissing { a, b, intersection: n });
            }
        }
    }
    TopologyReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sar_universe() -> EntityUniverse {
        EntityUniverse::new(["x", "y", "z", "v_x", "v_y", "t", "theta1", "theta2", "s"]).unwrap()
    }

    fn sar_subbase() -> Vec<Vec<&'static str>> {
        vec![
            vec!["x", "y", "z"],
            vec!["x", "y", "z", "v_x", "v_y"],
            vec!["theta1", "t"],
            vec!["theta2", "t"],
            vec!["theta1", "theta2", "s"],
            vec!["x", "y", "z", "v_x", "v_y", "t", "theta1", "theta2", "s"],
        ]
    }

    #[test]
    fn universe_rejects_bad_names() {
        assert_eq!(EntityUniverse::new(["a", "a"]), Err(Error::DuplicateEntity("a".into())));
        assert!(matches!(EntityUniverse::new(["a", ""]), Err(Error::InvalidEntityName(_))));
        assert!(matches!(EntityUniverse::new(["a+b"]), Err(Error::InvalidEntityName(_))));
        let many: Vec<String> = (0..65).map(|i| alloc::format!("e{i}")).collect();
        assert_eq!(EntityUniverse::new(many), Err(Error::UniverseTooLarge(65)));
    }

    #[test]
    fn empty_subbase_gives_indiscrete_topology() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = Topology::generate(u, &[], DEFAULT_OPEN_CAP).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.set(t.empty()), EntitySet::EMPTY);
        assert_eq!(t.set(t.whole()), EntitySet::full(2));
    }

    #[test]
    fn sar_topology_contains_intersections_and_unions() {
        let t = generate_topology(sar_universe(), &sar_subbase()).unwrap();
        for names in
            [vec!["t"], vec!["theta1"], vec!["theta2"], vec!["theta1", "theta2"], vec!["theta1", "theta2", "s", "t"]]
        {
            assert!(t.open_by_names(&names).is_ok(), "{names:?} should be open");
        }
        assert_eq!(t.len(), 30);
        assert_eq!(t.key(t.open_by_names(&["theta1", "t"]).unwrap()), "t+theta1");
    }

    #[test]
    fn unknown_entity_is_reported() {
        let r = generate_topology(sar_universe(), &[vec!["q"]]);
        assert_eq!(r.unwrap_err(), Error::UnknownEntity("q".into()));
    }

    #[test]
    fn cap_is_enforced() {
        let names: Vec<String> = (0..13).map(|i| alloc::format!("e{i}")).collect();
        let u = EntityUniverse::new(names.clone()).unwrap();
        let singletons: Vec<Vec<String>> = names.iter().map(|n| vec![n.clone()]).collect();
        assert_eq!(generate_topology(u, &singletons).unwrap_err(), Error::TopologyTooLarge { cap: 4096 });
    }

    #[test]
    fn comparable_pairs_small_chain() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let a = t.open_by_names(&["a"]).unwrap();
        assert_eq!(t.comparable_pairs(), vec![(a, t.whole())]);
    }

    #[test]
    fn sar_comparable_pairs_include_time_edges() {
        let t = generate_topology(sar_universe(), &sar_subbase()).unwrap();
        let pairs = t.comparable_pairs();
        let time = t.open_by_names(&["t"]).unwrap();
        let u3 = t.open_by_names(&["theta1", "t"]).unwrap();
        let u34 = t.open_by_names(&["theta1", "theta2", "t"]).unwrap();
        assert!(pairs.contains(&(time, u3)));
        assert!(pairs.contains(&(time, u34)));
    }

    #[test]
    fn hasse_has_no_transitive_edges() {
        let t = generate_topology(sar_universe(), &sar_subbase()).unwrap();
        for (u, v) in t.hasse_edges() {
            for w in t.ids() {
                let (su, sv, sw) = (t.set(u), t.set(v), t.set(w));
                assert!(!(sv.is_strict_subset(sw) && sw.is_strict_subset(su)));
            }
        }
    }

    #[test]
    fn sar_sets_alone_are_not_a_topology() {
        let u = sar_universe();
        let family: Vec<EntitySet> = sar_subbase().iter().map(|s| u.set_of(s).unwrap()).collect();
        let report = verify_topology(u.full(), &family);
        let t = u.set_of(&["t"]).unwrap();
        assert!(report.violations.iter().any(|v| matches!(v,
            Violation::IntersectionMissing { intersection, .. } if *intersection == t)));
        assert!(report.violations.contains(&Violation::MissingEmpty));
    }

    #[test]
    fn discrete_two_point_family_is_topology() {
        let fam = [0b00, 0b01, 0b10, 0b11].map(EntitySet::from_bits);
        assert!(verify_topology(EntitySet::full(2), &fam).is_topology());
    }

    #[test]
    fn subspace_maps_back_to_parent() {
        let t = generate_topology(sar_universe(), &sar_subbase()).unwrap();
        let u34 = t.open_by_names(&["theta1", "theta2", "t"]).unwrap();
        let sub = t.subspace(u34);
        assert_eq!(sub.topology.universe().names(), ["t", "theta1", "theta2"]);
        assert_eq!(sub.topology.len(), 8);
        assert_eq!(sub.to_parent[sub.topology.whole().index()], u34);
        for id in sub.topology.ids() {
            assert_eq!(sub.topology.key(id), t.key(sub.to_parent[id.index()]));
        }
    }

    #[test]
    fn minimal_opens_of_sar() {
        let t = generate_topology(sar_universe(), &sar_subbase()).unwrap();
        let keys: Vec<String> = t.minimal_opens().into_iter().map(|o| t.key(o)).collect();
        assert_eq!(keys, ["t", "theta1", "theta2", "x+y+z", "s+theta1+theta2", "v_x+v_y+x+y+z"].map(String::from));
    }
}
