//! Axiom checkers: path independence of composed restrictions and gluing for linear sheaves.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use super::{MapBody, Sheaf};
use crate::linalg::Matrix;
use crate::topology::OpenId;
use crate::{Error, Result};

/// Largest accepted disagreement between two composition paths.
pub const FUNCTORIALITY_TOLERANCE: f64 = 1e-9;

const MAX_PATHS_PER_PAIR: usize = 64;

/// Worst disagreement found between the composition paths joining two declared opens.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDiscrepancy {
    /// Larger open.
    pub from: OpenId,
    /// Smaller open.
    pub to: OpenId,
    /// Number of distinct paths compared (capped at 64).
    pub paths: usize,
    /// Largest distance, in the metric of the smaller stalk, between two paths' outputs.
    pub max_discrepancy: f64,
    /// The two paths (lists of opens) that disagreed the most.
    pub witness: (Vec<OpenId>, Vec<OpenId>),
}

/// Result of [`Sheaf::verify_functoriality`].
#[derive(Debug, Clone, PartialEq)]
pub struct FunctorialityReport {
    /// One entry per pair of declared opens joined by at least two paths.
    pub checked: Vec<PathDiscrepancy>,
    /// Points sampled per pair.
    pub samples: usize,
}

impl FunctorialityReport {
    /// True when every pair is within [`FUNCTORIALITY_TOLERANCE`]. Vacuously true without diamonds.
    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    /// Pairs above tolerance.
    pub fn failures(&self) -> impl Iterator<Item = &PathDiscrepancy> {
        self.checked.iter().filter(|p| p.max_discrepancy.is_nan() || p.max_discrepancy > FUNCTORIALITY_TOLERANCE)
    }

    /// Pair with the largest discrepancy.
    pub fn worst(&self) -> Option<&PathDiscrepancy> {
        self.checked.iter().max_by(|a, b| a.max_discrepancy.total_cmp(&b.max_discrepancy))
    }
}

/// Gluing diagnostics for one pair of incomparable opens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingPair {
    /// First open.
    pub u: OpenId,
    /// Second open.
    pub v: OpenId,
    /// Dimension of the stalk on `u ∪ v`.
    pub union_dim: usize,
    /// Dimension of the pairs of values on `u` and `v` that agree on `u ∩ v`.
    pub agreement_dim: usize,
    /// Rank of the joint restriction out of the union stalk.
    pub joint_rank: usize,
    /// Every agreeing pair comes from a value on the union.
    pub exists: bool,
    /// The value on the union is determined by its restrictions.
    pub unique: bool,
}

/// Result of [`Sheaf::verify_gluing`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GluingReport {
    /// One entry per unordered pair of incomparable nonempty opens.
    pub pairs: Vec<GluingPair>,
}

impl GluingReport {
    /// True when existence and uniqueness hold for every pair.
    pub fn passed(&self) -> bool {
        self.pairs.iter().all(|p| p.exists && p.unique)
    }

    /// Pairs violating existence or uniqueness.
    pub fn failures(&self) -> impl Iterator<Item = &GluingPair> {
        self.pairs.iter().filter(|p| !(p.exists && p.unique))
    }
}

impl Sheaf {
    fn declared_paths(&self, from: OpenId, memo: &mut BTreeMap<OpenId, BTreeMap<OpenId, Vec<Vec<OpenId>>>>) {
        if memo.contains_key(&from) {
            return;
        }
        let mut out: BTreeMap<OpenId, Vec<Vec<OpenId>>> = BTreeMap::new();
        for &c in self.declared_children(from) {
            out.entry(c).or_default().push(vec![from, c]);
            self.declared_paths(c, memo);
            for (target, paths) in &memo[&c] {
                let slot = out.entry(*target).or_default();
                for p in paths {
                    if slot.len() >= MAX_PATHS_PER_PAIR {
                        break;
                    }
                    let mut q = Vec::with_capacity(p.len() + 1);
                    q.push(from);
                    q.extend_from_slice(p);
                    slot.push(q);
                }
            }
        }
        memo.insert(from, out);
    }

    fn path_body(&self, path: &[OpenId]) -> MapBody {
        path.windows(2).fold(MapBody::Identity, |acc, w| acc.then(self.declared_maps()[&(w[0], w[1])].clone()))
    }

    /// Samples `samples` points per pair of declared opens joined by two or more chains of
    /// declared restrictions, and reports the largest disagreement between chains.
    pub fn verify_functoriality(&self, samples: usize, seed: u64) -> FunctorialityReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut memo = BTreeMap::new();
        let mut checked = Vec::new();
        let declared: Vec<OpenId> = self.topology().nonempty_ids().filter(|id| self.is_declared(*id)).collect();
        for &u in declared.iter().rev() {
            self.declared_paths(u, &mut memo);
            for (&v, paths) in &memo[&u] {
                if paths.len() < 2 {
                    continue;
                }
                let bodies: Vec<MapBody> = paths.iter().map(|p| self.path_body(p)).collect();
                let target = self.stalk(v);
                let mut worst = (0.0f64, 0usize, 1usize);
                for _ in 0..samples {
                    let x = self.stalk(u).sample(&mut rng);
                    let outs: Vec<Vec<f64>> = bodies
                        .iter()
                        .map(|b| {
                            let mut y = b.apply(&x);
                            target.normalize(&mut y);
                            y
                        })
                        .collect();
                    for (k, o) in outs.iter().enumerate().skip(1) {
                        let d = target.dist(&outs[0], o);
                        let d = if d.is_nan() { f64::INFINITY } else { d };
                        if d > worst.0 {
                            worst = (d, 0, k);
                        }
                    }
                }
                checked.push(PathDiscrepancy {
                    from: u,
                    to: v,
                    paths: paths.len(),
                    max_discrepancy: worst.0,
                    witness: (paths[worst.1].clone(), paths[worst.2].clone()),
                });
            }
        }
        FunctorialityReport { checked, samples }
    }

    /// Checks the gluing axiom by rank computations on every pair of incomparable opens.
    ///
    /// With `W = U ∪ V` and `I = U ∩ V`, the agreement space is the kernel of
    /// `[R(U→I), −R(V→I)]` and the joint restriction is `J = [R(W→U); R(W→V)]`. Existence
    /// holds when `rank J` equals the agreement dimension and uniqueness when it equals
    /// `dim S(W)`.
    pub fn verify_gluing(&self) -> Result<GluingReport> {
        if !self.is_linear() {
            return Err(Error::NonlinearSheaf);
        }
        let t = self.topology();
        let ids: Vec<OpenId> = t.nonempty_ids().collect();
        let mut pairs = Vec::new();
        for (i, &u) in ids.iter().enumerate() {
            for &v in &ids[i + 1..] {
                if t.is_subset(u, v) || t.is_subset(v, u) {
                    continue;
                }
                let w = t.id_of(t.set(u).union(t.set(v))).expect("unions of opens are open");
                let inter = t.id_of(t.set(u).intersection(t.set(v))).expect("intersections of opens are open");
                let (du, dv, dw) = (self.stalk(u).dim(), self.stalk(v).dim(), self.stalk(w).dim());
                let agree_rank = if inter == t.empty() {
                    0
                } else {
                    let ru = self.linear_matrix(u, inter)?;
                    let rv = self.linear_matrix(v, inter)?;
                    Matrix::hstack(ru.rows(), &[ru, rv.scaled(-1.0)]).rank()
                };
                let agreement_dim = du + dv - agree_rank;
                let j = Matrix::vstack(dw, &[self.linear_matrix(w, u)?, self.linear_matrix(w, v)?]);
                let joint_rank = j.rank();
                pairs.push(GluingPair {
                    u,
                    v,
                    union_dim: dw,
                    agreement_dim,
                    joint_rank,
                    exists: joint_rank == agreement_dim,
                    unique: joint_rank == dw,
                });
            }
        }
        Ok(GluingReport { pairs })
    }
}

#[cfg(test)]
mod tests {
    use alloc::vec;
    use alloc::vec::Vec;

    use crate::linalg::Matrix;
    use crate::sheaf::{MapBody, SheafBuilder};
    use crate::spaces::ValueSpace;
    use crate::topology::{generate_topology, EntityUniverse};
    use crate::Error;

    /// Diamond X → {a,c}, {b,c} → {c}; `corrupt` makes the right-hand projection pick the wrong coordinate.
    fn diamond(corrupt: bool) -> crate::sheaf::Sheaf {
        let u = EntityUniverse::new(["a", "b", "c"]).unwrap();
        let t = generate_topology(u, &[vec!["a", "c"], vec!["b", "c"], vec!["a", "b", "c"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a", "b", "c"], ValueSpace::euclidean(3)).unwrap();
        b.stalk_named(&["a", "c"], ValueSpace::euclidean(2)).unwrap();
        b.stalk_named(&["b", "c"], ValueSpace::euclidean(2)).unwrap();
        b.stalk_named(&["c"], ValueSpace::euclidean(1)).unwrap();
        b.restriction_named(&["a", "b", "c"], &["a", "c"], MapBody::Projection(vec![0, 2])).unwrap();
        b.restriction_named(&["a", "b", "c"], &["b", "c"], MapBody::Projection(vec![1, 2])).unwrap();
        b.restriction_named(&["a", "c"], &["c"], MapBody::Projection(vec![1])).unwrap();
        let last = if corrupt { 0 } else { 1 };
        b.restriction_named(&["b", "c"], &["c"], MapBody::Projection(vec![last])).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn consistent_diamond_passes() {
        let r = diamond(false).verify_functoriality(32, 1);
        assert_eq!(r.checked.len(), 1);
        assert!(r.passed());
    }

    #[test]
    fn corrupted_projection_is_caught_with_witness() {
        let s = diamond(true);
        let r = s.verify_functoriality(32, 1);
        assert!(!r.passed());
        let w = r.worst().unwrap();
        assert_eq!(s.topology().key(w.from), "a+b+c");
        assert_eq!(s.topology().key(w.to), "c");
        assert_ne!(w.witness.0, w.witness.1);
    }

    #[test]
    fn chain_is_vacuous() {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(1)).unwrap();
        b.restriction_named(&["a", "b"], &["a"], MapBody::Identity).unwrap();
        let r = b.build().unwrap().verify_functoriality(8, 0);
        assert!(r.checked.is_empty() && r.passed());
    }

    #[test]
    fn counterexample_fails_existence() {
        let u = EntityUniverse::new(["p", "q", "r"]).unwrap();
        let t = generate_topology(u, &[vec!["p", "q"], vec!["q", "r"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["p", "q", "r"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["p", "q"], ValueSpace::euclidean(2)).unwrap();
        b.stalk_named(&["q", "r"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["q"], ValueSpace::euclidean(1)).unwrap();
        b.restriction_named(&["p", "q", "r"], &["p", "q"], MapBody::Linear(Matrix::from_rows(&[[1.0], [0.0]], 1)))
            .unwrap();
        b.restriction_named(&["p", "q", "r"], &["q", "r"], MapBody::Identity).unwrap();
        b.restriction_named(&["p", "q"], &["q"], MapBody::Linear(Matrix::from_rows(&[[1.0, 1.0]], 2))).unwrap();
        b.restriction_named(&["q", "r"], &["q"], MapBody::Identity).unwrap();
        let s = b.build().unwrap();
        let r = s.verify_gluing().unwrap();
        assert!(!r.passed());
        let f = r.failures().next().unwrap();
        assert!(!f.exists && f.unique);
        assert_eq!((f.agreement_dim, f.joint_rank), (2, 1));
    }

    #[test]
    fn gluing_requires_linear() {
        let u = EntityUniverse::new(["a"]).unwrap();
        let t = generate_topology(u, &[] as &[Vec<&str>]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::circle()).unwrap();
        assert_eq!(b.build().unwrap().verify_gluing(), Err(Error::NonlinearSheaf));
    }

    #[test]
    fn completed_linear_sheaf_glues() {
        assert!(diamond(false).verify_gluing().unwrap().passed());
    }
}
