//! Pseudometric value spaces for observations.
//!
//! A [`ValueSpace`] is a flat product of [`Factor`]s. Every factor has a coordinate
//! parameterization, a positive metric weight and optional per-coordinate bounds used for
//! sampling and for discretization. The product metric is the maximum of the weighted
//! factor distances.
//!
//! Coordinate conventions:
//!
//! | kind | coordinates |
//! |------|-------------|
//! | `Euclidean(n)` | `n` reals |
//! | `Circle` | one angle in degrees, normalized to `[0, 360)` |
//! | `GeoPosition2D` | longitude (east positive), latitude, in degrees |
//! | `GeoPosition3D` | longitude, latitude, altitude in km |
//! | `Time` | one real (hours in the bundled scenarios) |
//! | `Discrete(labels)` | index of the label |
//! | `Simplex(n)` | `n` nonnegative masses summing to 1 |

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Deref;

use rand_core::RngCore;
use rand_distr::{Distribution, Uniform};

use crate::geo::{self, EARTH_RADIUS_KM};
use crate::{Error, Result};

/// Tolerance on the mass of a simplex point.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// The kind of one factor of a value space.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    /// Real vectors with the L2 metric.
    Euclidean(usize),
    /// Angles in degrees with the shortest-arc metric.
    Circle,
    /// Surface positions with the haversine metric in km.
    GeoPosition2D,
    /// Positions with altitude; ground haversine combined with altitude difference.
    GeoPosition3D,
    /// Time stamps with the absolute-difference metric.
    Time,
    /// Finite label set with the 0/1 metric.
    Discrete(Vec<String>),
    /// Probability vectors with the total-variation metric.
    Simplex(usize),
}

impl FactorKind {
    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        match self {
            FactorKind::Euclidean(n) | FactorKind::Simplex(n) => *n,
            FactorKind::Circle | FactorKind::Time | FactorKind::Discrete(_) => 1,
            FactorKind::GeoPosition2D => 2,
            FactorKind::GeoPosition3D => 3,
        }
    }

    /// Short name used in reports and file formats.
    pub fn name(&self) -> &'static str {
        match self {
            FactorKind::Euclidean(_) => "euclidean",
            FactorKind::Circle => "circle",
            FactorKind::GeoPosition2D => "geo2d",
            FactorKind::GeoPosition3D => "geo3d",
            FactorKind::Time => "time",
            FactorKind::Discrete(_) => "discrete",
            FactorKind::Simplex(_) => "simplex",
        }
    }

    /// Bounds used when no explicit bounds are attached.
    pub fn default_bounds(&self) -> Vec<(f64, f64)> {
        match self {
            FactorKind::Euclidean(n) => alloc::vec![(-10.0, 10.0); *n],
            FactorKind::Circle => alloc::vec![(0.0, 360.0)],
            FactorKind::GeoPosition2D => alloc::vec![(-180.0, 180.0), (-90.0, 90.0)],
            FactorKind::GeoPosition3D => alloc::vec![(-180.0, 180.0), (-90.0, 90.0), (0.0, 20.0)],
            FactorKind::Time => alloc::vec![(0.0, 24.0)],
            FactorKind::Discrete(labels) => alloc::vec![(0.0, labels.len() as f64)],
            FactorKind::Simplex(n) => alloc::vec![(0.0, 1.0); *n],
        }
    }
}

/// One weighted factor of a value space.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    /// What the coordinates mean.
    pub kind: FactorKind,
    /// Positive scale applied to the factor metric.
    pub weight: f64,
    /// Optional per-coordinate `(low, high)` bounds for sampling and binning.
    pub bounds: Option<Vec<(f64, f64)>>,
}

impl Factor {
    /// Unit-weight factor without bounds.
    pub fn new(kind: FactorKind) -> Self {
        Self { kind, weight: 1.0, bounds: None }
    }

    /// Bounds in effect (explicit or default).
    pub fn effective_bounds(&self) -> Vec<(f64, f64)> {
        self.bounds.clone().unwrap_or_else(|| self.kind.default_bounds())
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = match &self.kind {
            FactorKind::Euclidean(_) => libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()),
            FactorKind::Circle => geo::angle_difference_deg(a[0], b[0]),
            FactorKind::GeoPosition2D => geo::haversine_km(a[0], a[1], b[0], b[1], EARTH_RADIUS_KM),
            FactorKind::GeoPosition3D => {
                let ground = geo::haversine_km(a[0], a[1], b[0], b[1], EARTH_RADIUS_KM);
                let dz = a[2] - b[2];
                libm::sqrt(ground * ground + dz * dz)
            }
            FactorKind::Time => (a[0] - b[0]).abs(),
            FactorKind::Discrete(_) => {
                if libm::round(a[0]) == libm::round(b[0]) {
                    0.0
                } else {
                    1.0
                }
            }
            FactorKind::Simplex(_) => 0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>(),
        };
        self.weight * d
    }

    fn validate(&self, c: &mut [f64]) -> Result<()> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate in {} factor", self.kind.name())));
        }
        match &self.kind {
            FactorKind::Circle => c[0] = geo::normalize_degrees(c[0]),
            FactorKind::GeoPosition2D | FactorKind::GeoPosition3D => {
                if !(-90.0..=90.0).contains(&c[1]) {
                    return Err(Error::InvalidPoint(format!("latitude {} outside [-90, 90]", c[1])));
                }
            }
            FactorKind::Discrete(labels) => {
                let i = c[0];
                if i < 0.0 || libm::trunc(i) != i || i >= labels.len() as f64 {
                    return Err(Error::InvalidPoint(format!("label index {i} outside 0..{}", labels.len())));
                }
            }
            FactorKind::Simplex(_) => {
                let sum: f64 = c.iter().sum();
                if c.iter().any(|v| *v < -SIMPLEX_TOLERANCE) || (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
                    return Err(Error::InvalidPoint(format!("simplex point has mass {sum}")));
                }
            }
            FactorKind::Euclidean(_) | FactorKind::Time => {}
        }
        Ok(())
    }
}

/// A flat product of weighted factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueSpace {
    factors: Vec<Factor>,
}

/// A validated coordinate vector of some [`ValueSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    /// Coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    /// Consumes the point.
    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl ValueSpace {
    /// Space made of the given factors.
    pub fn from_factors(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    /// Single unit-weight factor.
    pub fn single(kind: FactorKind) -> Self {
        Self { factors: alloc::vec![Factor::new(kind)] }
    }

    /// `ℝⁿ`.
    pub fn euclidean(n: usize) -> Self {
        Self::single(FactorKind::Euclidean(n))
    }

    /// Circle of angles in degrees.
    pub fn circle() -> Self {
        Self::single(FactorKind::Circle)
    }

    /// Surface position.
    pub fn geo2d() -> Self {
        Self::single(FactorKind::GeoPosition2D)
    }

    /// Position with altitude.
    pub fn geo3d() -> Self {
        Self::single(FactorKind::GeoPosition3D)
    }

    /// Time line.
    pub fn time() -> Self {
        Self::single(FactorKind::Time)
    }

    /// Finite label set.
    pub fn discrete<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Self {
        Self::single(FactorKind::Discrete(labels.into_iter().map(Into::into).collect()))
    }

    /// Probability simplex on `n` bins.
    pub fn simplex(n: usize) -> Self {
        Self::single(FactorKind::Simplex(n))
    }

    /// Copy with every factor weight multiplied by `w`.
    pub fn weighted(mut self, w: f64) -> Self {
        for f in &mut self.factors {
            f.weight *= w;
        }
        self
    }

    /// Copy with bounds attached to a single-factor space.
    pub fn bounded(mut self, bounds: Vec<(f64, f64)>) -> Self {
        if let [f] = self.factors.as_mut_slice() {
            f.bounds = Some(bounds);
        }
        self
    }

    /// Flattened product of spaces.
    pub fn product(spaces: impl IntoIterator<Item = ValueSpace>) -> Self {
        Self { factors: spaces.into_iter().flat_map(|s| s.factors).collect() }
    }

    /// Factors in order.
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Number of coordinates.
    pub fn dim(&self) -> usize {
        self.factors.iter().map(|f| f.kind.dim()).sum()
    }

    /// Coordinate range of each factor.
    pub fn factor_ranges(&self) -> Vec<core::ops::Range<usize>> {
        let mut off = 0;
        self.factors
            .iter()
            .map(|f| {
                let r = off..off + f.kind.dim();
                off = r.end;
                r
            })
            .collect()
    }

    /// True when every factor is Euclidean.
    pub fn is_euclidean(&self) -> bool {
        self.factors.iter().all(|f| matches!(f.kind, FactorKind::Euclidean(_)))
    }

    /// Per-coordinate flag marking circular coordinates.
    pub fn circular_mask(&self) -> Vec<bool> {
        self.factors
            .iter()
            .flat_map(|f| core::iter::repeat_n(matches!(f.kind, FactorKind::Circle), f.kind.dim()))
            .collect()
    }

    /// Per-coordinate bounds (explicit or default).
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.factors.iter().flat_map(Factor::effective_bounds).collect()
    }

    /// Validates and normalizes coordinates into a point of this space.
    pub fn point(&self, mut coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::SpaceMismatch(format!("expected {} coordinates, got {}", self.dim(), coords.len())));
        }
        for (f, r) in self.factors.iter().zip(self.factor_ranges()) {
            f.validate(&mut coords[r])?;
        }
        Ok(Point(coords))
    }

    /// Wraps circular coordinates in place without further validation.
    pub fn normalize(&self, coords: &mut [f64]) {
        for (f, r) in self.factors.iter().zip(self.factor_ranges()) {
            if matches!(f.kind, FactorKind::Circle) {
                coords[r.start] = geo::normalize_degrees(coords[r.start]);
            }
        }
    }

    /// True when `coords` has the right length and passes validation.
    pub fn contains(&self, coords: &[f64]) -> bool {
        self.point(coords.to_vec()).is_ok()
    }

    /// Distance between validated points.
    pub fn distance(&self, x: &Point, y: &Point) -> Result<f64> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::SpaceMismatch(format!(
                "points of length {} and {} in a {}-dimensional space",
                x.len(),
                y.len(),
                self.dim()
            )));
        }
        Ok(self.dist(x, y))
    }

    /// Distance between raw coordinate slices of the right length.
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        let mut best = 0.0f64;
        let mut off = 0;
        for f in &self.factors {
            let n = f.kind.dim();
            best = best.max(f.distance(&x[off..off + n], &y[off..off + n]));
            off += n;
        }
        best
    }

    /// Random point inside the effective bounds.
    pub fn sample<R: RngCore>(&self, rng: &mut R) -> Point {
        let mut coords = Vec::with_capacity(self.dim());
        for f in &self.factors {
            let bounds = f.effective_bounds();
            match &f.kind {
                FactorKind::Discrete(labels) => {
                    let n = labels.len().max(1);
                    coords.push(Uniform::new(0, n).map_or(0, |u| u.sample(rng)) as f64);
                }
                FactorKind::Simplex(n) => {
                    let u = Uniform::new(f64::MIN_POSITIVE, 1.0).expect("valid range");
                    let raw: Vec<f64> = (0..*n).map(|_| -libm::log(u.sample(rng))).collect();
                    let total: f64 = raw.iter().sum();
                    coords.extend(raw.iter().map(|v| v / total));
                }
                _ => {
                    for (lo, hi) in bounds {
                        coords.push(if hi > lo { Uniform::new(lo, hi).expect("valid range").sample(rng) } else { lo });
                    }
                }
            }
        }
        self.normalize(&mut coords);
        Point(coords)
    }

    /// Compact description such as `geo3d×euclidean(2)×time`.
    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|f| {
                let base = match &f.kind {
                    FactorKind::Euclidean(n) => format!("euclidean({n})"),
                    FactorKind::Simplex(n) => format!("simplex({n})"),
                    FactorKind::Discrete(l) => format!("discrete({})", l.len()),
                    k => String::from(k.name()),
                };
                if f.weight == 1.0 {
                    base
                } else {
                    format!("{base}[w={}]", f.weight)
                }
            })
            .collect();
        if parts.is_empty() {
            String::from("point")
        } else {
            parts.join("×")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    #[test]
    fn circle_wraps() {
        let c = ValueSpace::circle();
        let a = c.point(alloc::vec![359.0]).unwrap();
        let b = c.point(alloc::vec![361.0]).unwrap();
        assert_eq!(b.coords(), [1.0]);
        assert!((c.distance(&a, &b).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn product_is_flat_max() {
        let p = ValueSpace::product([ValueSpace::euclidean(3), ValueSpace::euclidean(2).weighted(2.0)]);
        assert_eq!(p.dim(), 5);
        assert_eq!(p.factors().len(), 2);
        let x = p.point(alloc::vec![0.0; 5]).unwrap();
        let y = p.point(alloc::vec![3.0, 4.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((p.distance(&x, &y).unwrap() - 5.0).abs() < 1e-12);
        let single = ValueSpace::product([ValueSpace::time()]);
        assert_eq!(single, ValueSpace::time());
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(ValueSpace::euclidean(2).point(alloc::vec![1.0]), Err(Error::SpaceMismatch(_))));
        assert!(ValueSpace::simplex(2).point(alloc::vec![0.5, 0.6]).is_err());
        assert!(ValueSpace::simplex(2).point(alloc::vec![0.25, 0.75]).is_ok());
        assert!(ValueSpace::discrete(["a", "b"]).point(alloc::vec![2.0]).is_err());
        assert!(ValueSpace::geo2d().point(alloc::vec![0.0, 91.0]).is_err());
        assert!(ValueSpace::time().point(alloc::vec![f64::NAN]).is_err());
    }

    #[test]
    fn discrete_and_simplex_metrics() {
        let d = ValueSpace::discrete(["a", "b", "c"]);
        assert_eq!(d.dist(&[0.0], &[2.0]), 1.0);
        assert_eq!(d.dist(&[1.0], &[1.0]), 0.0);
        let s = ValueSpace::simplex(3);
        assert!((s.dist(&[1.0, 0.0, 0.0], &[0.0, 0.5, 0.5]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn geo3d_adds_altitude() {
        let g = ValueSpace::geo3d();
        assert!((g.dist(&[10.0, 10.0, 0.0], &[10.0, 10.0, 3.0]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn samples_are_valid_points() {
        let space = ValueSpace::product([
            ValueSpace::geo3d(),
            ValueSpace::circle(),
            ValueSpace::simplex(4),
            ValueSpace::discrete(["p", "q"]),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = space.sample(&mut rng);
            assert!(space.contains(&p), "{p:?}");
        }
    }

    #[test]
    fn describe_lists_factors() {
        let s = ValueSpace::product([ValueSpace::geo2d(), ValueSpace::circle().weighted(25.0)]);
        assert_eq!(s.describe(), "geo2d×circle[w=25]");
    }
}
