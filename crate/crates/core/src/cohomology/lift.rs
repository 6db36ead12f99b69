//! Stochastic lifts: nonlinear maps between binned spaces become column-stochastic matrices
//! acting on histograms, which turns any sheaf into a linear one on distributions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{find_cell, nerve, BettiTable, Cell, Cover};
use crate::geo::normalize_degrees;
use crate::linalg::{Matrix, SparseMatrix};
use crate::sheaf::Sheaf;
use crate::spaces::{FactorKind, ValueSpace};
use crate::topology::OpenId;
use crate::{Error, Result};

/// Largest number of bins allowed in one binned stalk.
pub const MAX_LIFT_BINS: usize = 1 << 21;

/// Cochain dimension up to which [`LiftedComplex::betti`] computes dense ranks.
pub const DENSE_RANK_LIMIT: usize = 2048;

/// Tolerance on column sums of lifted maps.
const COLUMN_SUM_TOLERANCE: f64 = 1e-12;

/// The lift of a map between finite sets of bins: `M[j][i] = 1` when bin `i` maps to `j`.
///
/// Fails with [`Error::UnmappedBin`] when `f` gives no bin, or an out-of-range bin, for
/// some domain bin.
pub fn stochastic_lift<F: Fn(usize) -> Option<usize>>(
    f: F,
    domain_bins: usize,
    codomain_bins: usize,
) -> Result<Matrix> {
    let mut m = Matrix::zeros(codomain_bins, domain_bins);
    for i in 0..domain_bins {
        match f(i) {
            Some(j) if j < codomain_bins => m[(j, i)] = 1.0,
            _ => return Err(Error::UnmappedBin(i)),
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    lo: f64,
    hi: f64,
    bins: usize,
    circular: bool,
}

impl Axis {
    fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    fn index(&self, v: f64) -> usize {
        let v = if self.circular { normalize_degrees(v) } else { v };
        let k = libm::floor((v - self.lo) / self.width());
        if k < 0.0 {
            0
        } else {
            (k as usize).min(self.bins - 1)
        }
    }
}

/// A regular grid of bins over the bounds of a value space. Discrete factors get one bin
/// per label; every other coordinate is cut into the same number of equal bins. Values
/// outside the bounds fall into the nearest edge bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Binning {
    axes: Vec<Axis>,
    len: usize,
}

impl Binning {
    /// Bins a value space with `bins_per_axis` bins on each continuous coordinate.
    pub fn new(space: &ValueSpace, bins_per_axis: usize) -> Result<Self> {
        if bins_per_axis == 0 {
            return Err(Error::InvalidOptions("at least one bin per axis is needed".into()));
        }
        let mut axes = Vec::with_capacity(space.dim());
        for f in space.factors() {
            let bounds = f.effective_bounds();
            match &f.kind {
                FactorKind::Discrete(labels) => {
                    axes.push(Axis { lo: -0.5, hi: labels.len() as f64 - 0.5, bins: labels.len(), circular: false })
                }
                kind => {
                    let circular = matches!(kind, FactorKind::Circle);
                    for (lo, hi) in bounds {
                        let (lo, hi) = if circular { (0.0, 360.0) } else { (lo, hi) };
                        axes.push(Axis { lo, hi, bins: bins_per_axis, circular });
                    }
                }
            }
        }
        let mut len = 1usize;
        for a in &axes {
            len = len.checked_mul(a.bins).filter(|&l| l <= MAX_LIFT_BINS).ok_or_else(|| {
                Error::InvalidOptions(format!("binning `{}` exceeds {MAX_LIFT_BINS} bins", space.describe()))
            })?;
        }
        Ok(Self { axes, len })
    }

    /// Total number of bins.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True for a zero-bin grid, which cannot be constructed.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bin containing a point (first coordinate most significant).
    pub fn bin_of(&self, x: &[f64]) -> usize {
        self.axes.iter().zip(x).fold(0, |acc, (a, v)| acc * a.bins + a.index(*v))
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            d[k] = index % a.bins;
            index /= a.bins;
        }
        d
    }

    /// Centre of a bin.
    pub fn center(&self, index: usize) -> Vec<f64> {
        self.digits(index).iter().zip(&self.axes).map(|(&k, a)| a.lo + (k as f64 + 0.5) * a.width()).collect()
    }

    /// `per_axis^d` evenly spaced sample points inside a bin.
    pub fn samples(&self, index: usize, per_axis: usize) -> Vec<Vec<f64>> {
        let digits = self.digits(index);
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for (k, a) in digits.iter().zip(&self.axes) {
            let mut next = Vec::with_capacity(out.len() * per_axis);
            for p in &out {
                for s in 0..per_axis {
                    let mut q = p.clone();
                    q.push(a.lo + (*k as f64 + (s as f64 + 0.5) / per_axis as f64) * a.width());
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }
}

/// Lifts a map to a column-stochastic matrix: column `i` holds the fraction of the
/// `samples_per_axis^d` sample points of domain bin `i` that land in each codomain bin.
pub fn lift_map<F: Fn(&[f64]) -> Vec<f64>>(
    f: F,
    domain: &Binning,
    codomain: &Binning,
    samples_per_axis: usize,
) -> Result<SparseMatrix> {
    let per_axis = samples_per_axis.max(1);
    let mut triplets = Vec::with_capacity(domain.len());
    for i in 0..domain.len() {
        let points = if per_axis == 1 { vec![domain.center(i)] } else { domain.samples(i, per_axis) };
        let share = 1.0 / points.len() as f64;
        for p in points {
            let y = f(&p);
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("lifted map at bin {i}")));
            }
            triplets.push((codomain.bin_of(&y), i, share));
        }
    }
    Ok(SparseMatrix::from_triplets(codomain.len(), domain.len(), triplets))
}

/// Čech complex of the stochastic lift of a sheaf: each stalk becomes the space of
/// histograms over its bins and each restriction its lifted matrix.
///
/// Lifts of nonlinear maps are only approximately functorial after binning, so
/// `d^{k+1} d^k` need not vanish exactly; [`LiftedComplex::dd_residual`] measures it.
#[derive(Debug, Clone)]
pub struct LiftedComplex {
    cells: Vec<Vec<Cell>>,
    coboundaries: Vec<SparseMatrix>,
    lifted: BTreeMap<(OpenId, OpenId), SparseMatrix>,
}

impl LiftedComplex {
    /// Builds the lifted complex on a cover with coboundaries `d^0..=d^max_degree`.
    pub fn build(
        sheaf: &Sheaf,
        cover: &Cover,
        bins_per_axis: usize,
        samples_per_axis: usize,
        max_degree: usize,
    ) -> Result<Self> {
        let t = sheaf.topology();
        let cover = Cover::new(t, cover.sets().to_vec())?;
        let mut binnings: BTreeMap<OpenId, Binning> = BTreeMap::new();
        let mut cells: Vec<Vec<Cell>> = Vec::new();
        for level in nerve(t, &cover, max_degree + 1) {
            let mut offset = 0;
            let mut out = Vec::with_capacity(level.len());
            for (indices, open) in level {
                if let alloc::collections::btree_map::Entry::Vacant(e) = binnings.entry(open) {
                    e.insert(Binning::new(sheaf.stalk(open), bins_per_axis)?);
                }
                let dim = binnings[&open].len();
                out.push(Cell { indices, open, offset, dim });
                offset += dim;
            }
            cells.push(out);
        }
        let mut lifted: BTreeMap<(OpenId, OpenId), SparseMatrix> = BTreeMap::new();
        let mut coboundaries = Vec::with_capacity(max_degree + 1);
        for k in 0..=max_degree {
            let rows: usize = cells[k + 1].iter().map(|c| c.dim).sum();
            let cols: usize = cells[k].iter().map(|c| c.dim).sum();
            let mut triplets = Vec::new();
            for sigma in &cells[k + 1] {
                for j in 0..sigma.indices.len() {
                    let mut face = sigma.indices.clone();
                    face.remove(j);
                    let tau = &cells[k][find_cell(&cells[k], &face).expect("faces of nonempty cells are nonempty")];
                    let key = (tau.open, sigma.open);
                    if let alloc::collections::btree_map::Entry::Vacant(e) = lifted.entry(key) {
                        let map = sheaf.compose(tau.open, sigma.open)?;
                        e.insert(lift_map(
                            |x| map.apply(x),
                            &binnings[&tau.open],
                            &binnings[&sigma.open],
                            samples_per_axis,
                        )?);
                    }
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    for (r, c, v) in lifted[&key].triplets() {
                        triplets.push((sigma.offset + r, tau.offset + c, sign * v));
                    }
                }
            }
            coboundaries.push(SparseMatrix::from_triplets(rows, cols, triplets));
        }
        Ok(Self { cells, coboundaries, lifted })
    }

    /// `dim C^k` of the lifted complex.
    pub fn cochain_dim(&self, k: usize) -> usize {
        self.cells.get(k).map_or(0, |l| l.iter().map(|c| c.dim).sum())
    }

    /// Cells of degree `k`.
    pub fn cells(&self, k: usize) -> &[Cell] {
        self.cells.get(k).map_or(&[], |v| v.as_slice())
    }

    /// The coboundary `d^k`.
    pub fn coboundary(&self, k: usize) -> Option<&SparseMatrix> {
        self.coboundaries.get(k)
    }

    /// Number of distinct lifted restriction maps.
    pub fn lifted_map_count(&self) -> usize {
        self.lifted.len()
    }

    /// True when every lifted restriction is nonnegative with columns summing to 1.
    pub fn column_stochastic(&self) -> bool {
        self.lifted
            .values()
            .all(|m| m.min_value() >= 0.0 && m.column_sums().iter().all(|s| (s - 1.0).abs() <= COLUMN_SUM_TOLERANCE))
    }

    /// Largest entry of `d^{k+1} d^k` over the stored coboundaries.
    pub fn dd_residual(&self) -> f64 {
        self.coboundaries.windows(2).map(|w| w[1].mul(&w[0]).max_abs()).fold(0.0, f64::max)
    }

    /// Betti numbers, when every cochain space is small enough for dense ranks.
    pub fn betti(&self) -> Option<BettiTable> {
        let dims: Vec<usize> = (0..self.coboundaries.len()).map(|k| self.cochain_dim(k)).collect();
        if dims.iter().chain(core::iter::once(&self.cochain_dim(dims.len()))).any(|&d| d > DENSE_RANK_LIMIT) {
            return None;
        }
        let ranks: Vec<usize> = self.coboundaries.iter().map(|d| d.to_dense().rank()).collect();
        Some(BettiTable::from_ranks(&dims, &ranks))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_mass_bookkeeping() {
        let f = [0usize, 0, 1];
        let m = stochastic_lift(|i| Some(f[i]), 3, 2).unwrap();
        let u = m.mul_vec(&[1.0 / 3.0; 3]);
        assert!((u[0] - 2.0 / 3.0).abs() < 1e-15 && (u[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn delta_goes_to_delta() {
        let m = stochastic_lift(|i| Some((i * 3) % 5), 5, 5).unwrap();
        for i in 0..5 {
            let mut e = vec![0.0; 5];
            e[i] = 1.0;
            let out = m.mul_vec(&e);
            assert_eq!(out[(i * 3) % 5], 1.0);
            assert_eq!(out.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn unmapped_bin_is_reported() {
        assert_eq!(stochastic_lift(|i| (i < 2).then_some(0), 3, 1).unwrap_err(), Error::UnmappedBin(2));
        assert_eq!(stochastic_lift(|_| Some(4), 1, 2).unwrap_err(), Error::UnmappedBin(0));
    }

    #[test]
    fn binning_round_trip() {
        let space = ValueSpace::product([ValueSpace::euclidean(1), ValueSpace::circle()]);
        let b = Binning::new(&space, 4).unwrap();
        assert_eq!(b.len(), 16);
        for i in 0..b.len() {
            assert_eq!(b.bin_of(&b.center(i)), i);
        }
        assert_eq!(b.bin_of(&[-100.0, 359.0]), 3);
        assert_eq!(b.bin_of(&[100.0, -1.0]), 15);
    }

    #[test]
    fn lifted_map_is_column_stochastic() {
        let space = ValueSpace::euclidean(2);
        let d = Binning::new(&space, 3).unwrap();
        let c = Binning::new(&ValueSpace::euclidean(1), 5).unwrap();
        let m = lift_map(|x| vec![x[0] * x[1] / 10.0], &d, &c, 3).unwrap();
        for s in m.column_sums() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(m.min_value() >= 0.0);
    }

    #[test]
    fn oversized_binning_is_rejected() {
        let space = ValueSpace::euclidean(12);
        assert!(matches!(Binning::new(&space, 8), Err(Error::InvalidOptions(_))));
    }
}
