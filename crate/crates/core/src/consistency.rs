//! Assignments of observations to opens, the sup pseudometric between them and the
//! consistency radius.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::linalg::Matrix;
use crate::sheaf::{Sheaf, AGREEMENT_TOLERANCE};
use crate::spaces::{FactorKind, Point};
use crate::topology::OpenId;
use crate::{Error, Result};

/// Slack added to `eps` in [`is_epsilon_approximate`].
pub const EPSILON_SLACK: f64 = 1e-12;

/// A partial choice of one observation per open.
#[derive(Debug, Clone)]
pub struct Assignment<'s> {
    sheaf: &'s Sheaf,
    values: BTreeMap<OpenId, Point>,
}

impl<'s> Assignment<'s> {
    /// Empty assignment.
    pub fn new(sheaf: &'s Sheaf) -> Self {
        Self { sheaf, values: BTreeMap::new() }
    }

    /// The sheaf the values belong to.
    pub fn sheaf(&self) -> &'s Sheaf {
        self.sheaf
    }

    /// Attaches a value to an open, validating it against the stalk. Values on completed
    /// nonlinear stalks must agree on overlaps to within the agreement tolerance.
    pub fn set(&mut self, open: OpenId, coords: Vec<f64>) -> Result<&mut Self> {
        if open.index() >= self.sheaf.topology().len() {
            return Err(Error::NotOpen(format!("#{}", open.index())));
        }
        let point = self.sheaf.stalk(open).point(coords)?;
        let residual = self.sheaf.agreement_residual(open, &point)?;
        if residual.is_nan() || residual > AGREEMENT_TOLERANCE {
            return Err(Error::InvalidPoint(format!(
                "components of the value on `{}` disagree by {residual}",
                self.sheaf.topology().key(open)
            )));
        }
        self.values.insert(open, point);
        Ok(self)
    }

    /// Value on an open, if defined.
    pub fn get(&self, open: OpenId) -> Option<&Point> {
        self.values.get(&open)
    }

    /// Opens where the assignment is defined, in canonical order.
    pub fn domain(&self) -> impl Iterator<Item = OpenId> + '_ {
        self.values.keys().copied()
    }

    /// Defined `(open, value)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (OpenId, &Point)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    /// Number of defined opens.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// True when nothing is assigned.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The discrepancy on one inclusion `smaller ⊊ larger`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeError {
    /// Smaller open.
    pub smaller: OpenId,
    /// Larger open.
    pub larger: OpenId,
    /// `d(a(smaller), restrict(larger, smaller, a(larger)))`.
    pub error: f64,
}

/// Consistency radius with the per-inclusion errors behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    /// Largest edge error (0 when no inclusion has both ends defined).
    pub radius: f64,
    /// All edge errors, largest first.
    pub edges: Vec<EdgeError>,
}

/// Sup over the opens defined in both assignments of the stalk distance; 0 if none.
pub fn assignment_distance(a: &Assignment<'_>, b: &Assignment<'_>) -> Result<f64> {
    if !core::ptr::eq(a.sheaf, b.sheaf) {
        return Err(Error::SheafMismatch);
    }
    let mut d = 0.0f64;
    for (open, x) in a.iter() {
        if let Some(y) = b.get(open) {
            d = d.max(a.sheaf.stalk(open).dist(x, y));
        }
    }
    Ok(d)
}

/// Consistency radius: the largest discrepancy over every pair of nested opens where both
/// ends are defined, using composed restrictions.
pub fn consistency_radius(a: &Assignment<'_>) -> Result<ConsistencyReport> {
    let sheaf = a.sheaf;
    let mut edges = Vec::new();
    let domain: Vec<OpenId> = a.domain().collect();
    for &large in &domain {
        for &small in &domain {
            if small == large || !sheaf.topology().is_subset(small, large) {
                continue;
            }
            let restricted = sheaf.restrict_coords(large, small, &a.values[&large])?;
            let error = sheaf.stalk(small).dist(&a.values[&small], &restricted);
            if error.is_nan() {
                return Err(Error::NonFinite(format!(
                    "error on {} ⊆ {}",
                    sheaf.topology().key(small),
                    sheaf.topology().key(large)
                )));
            }
            edges.push(EdgeError { smaller: small, larger: large, error });
        }
    }
    edges.sort_by(|x, y| y.error.total_cmp(&x.error).then(x.larger.cmp(&y.larger)).then(x.smaller.cmp(&y.smaller)));
    let radius = edges.first().map_or(0.0, |e| e.error);
    Ok(ConsistencyReport { radius, edges })
}

/// True when the consistency radius is at most `eps` (plus a 1e-12 slack).
pub fn is_epsilon_approximate(a: &Assignment<'_>, eps: f64) -> Result<bool> {
    Ok(consistency_radius(a)?.radius <= eps + EPSILON_SLACK)
}

/// The total assignment obtained by restricting a value on the whole space to every open.
pub fn pullback_global<'s>(sheaf: &'s Sheaf, s_top: &Point) -> Result<Assignment<'s>> {
    let t = sheaf.topology();
    let x = t.whole();
    let top = sheaf.stalk(x).point(s_top.to_vec())?;
    let mut values = BTreeMap::new();
    for open in t.nonempty_ids() {
        let coords = sheaf.restrict_coords(x, open, &top)?;
        let p = sheaf.stalk(open).point(coords)?;
        values.insert(open, p);
    }
    Ok(Assignment { sheaf, values })
}

/// Lipschitz constant of the composed restrictions of a linear sheaf, measured in the
/// weighted stalk metrics.
///
/// For each nested pair the bound is `max_i Σ_j (w_i / w_j) ‖R_ij‖₂`, where `R_ij` is the
/// block of the restriction matrix from factor `j` of the larger stalk to factor `i` of the
/// smaller one. The result is the maximum over all pairs (0 when there are none).
pub fn lipschitz_constant(sheaf: &Sheaf) -> Result<f64> {
    if !sheaf.is_linear() {
        return Err(Error::NonlinearSheaf);
    }
    let mut k = 0.0f64;
    for (small, large) in sheaf.topology().comparable_pairs() {
        let m = sheaf.linear_matrix(large, small)?;
        k = k.max(block_bound(&m, sheaf, large, small));
    }
    Ok(k)
}

fn block_bound(m: &Matrix, sheaf: &Sheaf, from: OpenId, to: OpenId) -> f64 {
    let (src, dst) = (sheaf.stalk(from), sheaf.stalk(to));
    let mut best = 0.0f64;
    for (fi, ri) in dst.factors().iter().zip(dst.factor_ranges()) {
        let mut row_sum = 0.0;
        for (fj, rj) in src.factors().iter().zip(src.factor_ranges()) {
            debug_assert!(matches!(fj.kind, FactorKind::Euclidean(_)));
            let block = m.block(ri.start, rj.start, ri.len(), rj.len());
            row_sum += fi.weight / fj.weight * block.operator_norm();
        }
        best = best.max(row_sum);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheaf::{MapBody, SheafBuilder};
    use crate::spaces::ValueSpace;
    use crate::topology::{generate_topology, EntityUniverse};
    use alloc::vec;

    fn chain() -> Sheaf {
        let u = EntityUniverse::new(["a", "b"]).unwrap();
        let t = generate_topology(u, &[vec!["a"]]).unwrap();
        let mut b = SheafBuilder::new(t);
        b.stalk_named(&["a"], ValueSpace::euclidean(1)).unwrap();
        b.stalk_named(&["a", "b"], ValueSpace::euclidean(1)).unwrap();
        b.restriction_named(&["a", "b"], &["a"], MapBody::Identity).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn two_open_chain_radius() {
        let s = chain();
        let mut a = Assignment::new(&s);
        a.set(s.topology().whole(), vec![0.0]).unwrap();
        a.set(s.topology().open_by_names(&["a"]).unwrap(), vec![3.0]).unwrap();
        let r = consistency_radius(&a).unwrap();
        assert_eq!(r.radius, 3.0);
        assert_eq!(r.edges.len(), 1);
        assert!(!is_epsilon_approximate(&a, 2.9).unwrap());
        assert!(is_epsilon_approximate(&a, 3.0).unwrap());
        assert!(is_epsilon_approximate(&a, f64::INFINITY).unwrap());
    }

    #[test]
    fn empty_assignment_has_zero_radius() {
        let s = chain();
        let r = consistency_radius(&Assignment::new(&s)).unwrap();
        assert_eq!(r.radius, 0.0);
        assert!(r.edges.is_empty());
    }

    #[test]
    fn distance_between_assignments() {
        let s = chain();
        let x = s.topology().whole();
        let mut a = Assignment::new(&s);
        let mut b = Assignment::new(&s);
        assert_eq!(assignment_distance(&a, &b).unwrap(), 0.0);
        a.set(x, vec![1.0]).unwrap();
        b.set(x, vec![-1.5]).unwrap();
        assert_eq!(assignment_distance(&a, &b).unwrap(), 2.5);
        let other = chain();
        assert_eq!(assignment_distance(&a, &Assignment::new(&other)), Err(Error::SheafMismatch));
    }

    #[test]
    fn pullback_is_consistent_and_recovers_top() {
        let s = chain();
        let top = s.stalk(s.topology().whole()).point(vec![4.0]).unwrap();
        let a = pullback_global(&s, &top).unwrap();
        assert_eq!(a.get(s.topology().whole()), Some(&top));
        assert_eq!(consistency_radius(&a).unwrap().radius, 0.0);
        assert!(is_epsilon_approximate(&a, 0.0).unwrap());
    }

    #[test]
    fn lipschitz_of_projection_chain() {
        let s = chain();
        assert!((lipschitz_constant(&s).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn set_rejects_wrong_shape() {
        let s = chain();
        let mut a = Assignment::new(&s);
        assert!(matches!(a.set(s.topology().whole(), vec![1.0, 2.0]), Err(Error::SpaceMismatch(_))));
    }
}
