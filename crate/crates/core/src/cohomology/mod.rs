//! Čech cohomology of linear sheaves, topology-level cohomology, Leray checks and
//! stochastic lifts of nonlinear sheaves.

mod leray;
mod lift;
mod poset;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub use leray::{leray_check, IntersectionCheck, LerayReport};
pub use lift::{lift_map, stochastic_lift, Binning, LiftedComplex, DENSE_RANK_LIMIT, MAX_LIFT_BINS};
pub use poset::{topology_betti, PosetComplex};

use crate::linalg::Matrix;
use crate::sheaf::Sheaf;
use crate::topology::{EntitySet, OpenId, Topology};
use crate::{Error, Result};

/// A finite family of opens whose union is the whole space, in a fixed order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    sets: Vec<OpenId>,
}

impl Cover {
    /// Validates a cover: nonempty, no empty or repeated members, union equal to the space.
    pub fn new(topology: &Topology, sets: Vec<OpenId>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidCover("a cover needs at least one set".into()));
        }
        let mut union = EntitySet::EMPTY;
        for (i, &s) in sets.iter().enumerate() {
            if s.index() >= topology.len() {
                return Err(Error::NotOpen(format!("#{}", s.index())));
            }
            if s == topology.empty() {
                return Err(Error::InvalidCover("the empty set cannot be a cover member".into()));
            }
            if sets[..i].contains(&s) {
                return Err(Error::InvalidCover(format!("`{}` is listed twice", topology.key(s))));
            }
            union = union.union(topology.set(s));
        }
        if union != topology.set(topology.whole()) {
            return Err(Error::InvalidCover(format!(
                "the sets cover `{}`, not the whole space",
                topology.universe().key(union)
            )));
        }
        Ok(Self { sets })
    }

    /// Cover given by open keys such as `"t+theta1"`.
    pub fn from_keys<S: AsRef<str>>(topology: &Topology, keys: &[S]) -> Result<Self> {
        let sets = keys.iter().map(|k| topology.open_by_key(k.as_ref())).collect::<Result<Vec<_>>>()?;
        Self::new(topology, sets)
    }

    /// The subbase of the topology, with the whole space appended when the subbase does not
    /// cover it.
    pub fn subbase(topology: &Topology) -> Self {
        let mut sets: Vec<OpenId> = Vec::new();
        let mut union = EntitySet::EMPTY;
        for s in topology.subbase() {
            let id = topology.id_of(*s).expect("subbase members are open");
            if id != topology.empty() && !sets.contains(&id) {
                sets.push(id);
                union = union.union(*s);
            }
        }
        if union != topology.set(topology.whole()) {
            sets.push(topology.whole());
        }
        Self { sets }
    }

    /// Every nonempty open.
    pub fn all_opens(topology: &Topology) -> Self {
        Self { sets: topology.nonempty_ids().collect() }
    }

    /// The cover with the single set `X`.
    pub fn trivial(topology: &Topology) -> Self {
        Self { sets: vec![topology.whole()] }
    }

    /// Members in order.
    pub fn sets(&self) -> &[OpenId] {
        &self.sets
    }

    /// Number of members.
    pub fn len(&self) -> usize {
        self.sets.len()
    }

    /// Always false for a validated cover.
    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// A nonempty intersection of cover members, indexed by increasing member positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    /// Increasing cover indices.
    pub indices: Vec<usize>,
    /// The intersection.
    pub open: OpenId,
    /// Offset of this block in the cochain vector.
    pub offset: usize,
    /// Stalk dimension.
    pub dim: usize,
}

/// The nerve of a cover: nonempty `(k+1)`-fold intersections for `k = 0..=top`.
pub(crate) fn nerve(topology: &Topology, cover: &Cover, top: usize) -> Vec<Vec<(Vec<usize>, OpenId)>> {
    let mut levels: Vec<Vec<(Vec<usize>, OpenId)>> = vec![Vec::new(); top + 1];
    fn extend(
        t: &Topology,
        sets: &[OpenId],
        prefix: &mut Vec<usize>,
        acc: EntitySet,
        top: usize,
        levels: &mut Vec<Vec<(Vec<usize>, OpenId)>>,
    ) {
        let start = prefix.last().map_or(0, |&i| i + 1);
        for i in start..sets.len() {
            let next = if prefix.is_empty() { t.set(sets[i]) } else { acc.intersection(t.set(sets[i])) };
            if next.is_empty() {
                continue;
            }
            prefix.push(i);
            let id = t.id_of(next).expect("finite intersections of opens are open");
            levels[prefix.len() - 1].push((prefix.clone(), id));
            if prefix.len() <= top {
                extend(t, sets, prefix, next, top, levels);
            }
            prefix.pop();
        }
    }
    extend(topology, &cover.sets, &mut Vec::new(), EntitySet::EMPTY, top, &mut levels);
    for level in &mut levels {
        level.sort_by(|a, b| a.0.cmp(&b.0));
    }
    levels
}

/// Position of `face` in a sorted level, if present.
pub(crate) fn find_cell(level: &[Cell], face: &[usize]) -> Option<usize> {
    level.binary_search_by(|c| c.indices.as_slice().cmp(face)).ok()
}

/// Čech cochain complex of a linear sheaf on a cover.
#[derive(Debug, Clone)]
pub struct CochainComplex {
    cover: Cover,
    cells: Vec<Vec<Cell>>,
    coboundaries: Vec<Matrix>,
}

impl CochainComplex {
    /// The cover.
    pub fn cover(&self) -> &Cover {
        &self.cover
    }

    /// Cells of degree `k` (empty beyond the computed range).
    pub fn cells(&self, k: usize) -> &[Cell] {
        self.cells.get(k).map_or(&[], |v| v.as_slice())
    }

    /// `dim C^k`.
    pub fn cochain_dim(&self, k: usize) -> usize {
        self.cells(k).iter().map(|c| c.dim).sum()
    }

    /// The coboundary `d^k : C^k → C^{k+1}`, for `k` up to the requested maximum degree.
    pub fn coboundary(&self, k: usize) -> Option<&Matrix> {
        self.coboundaries.get(k)
    }

    /// Number of coboundaries stored.
    pub fn max_degree(&self) -> usize {
        self.coboundaries.len() - 1
    }

    /// Largest entry of `d^{k+1} d^k` over all stored consecutive pairs.
    pub fn dd_residual(&self) -> f64 {
        self.coboundaries.windows(2).map(|w| w[1].mul(&w[0]).max_abs()).fold(0.0, f64::max)
    }

    /// Betti numbers of the complex.
    pub fn betti(&self) -> BettiTable {
        let ranks: Vec<usize> = self.coboundaries.iter().map(Matrix::rank).collect();
        let dims: Vec<usize> = (0..self.coboundaries.len()).map(|k| self.cochain_dim(k)).collect();
        BettiTable::from_ranks(&dims, &ranks)
    }
}

/// Builds the Čech complex of a linear sheaf on a cover, with coboundaries `d^0..=d^max`.
///
/// `(d^k c)(i_0…i_{k+1}) = Σ_j (−1)^j S(U_{i_0…i_{k+1}} ⊆ U_{i_0…î_j…i_{k+1}}) c(i_0…î_j…i_{k+1})`.
pub fn build_complex(sheaf: &Sheaf, cover: &Cover, max_degree: usize) -> Result<CochainComplex> {
    if !sheaf.is_linear() {
        return Err(Error::NonlinearSheaf);
    }
    let t = sheaf.topology();
    let cover = Cover::new(t, cover.sets.clone())?;
    let levels = nerve(t, &cover, max_degree + 1);
    let cells: Vec<Vec<Cell>> = levels
        .into_iter()
        .map(|level| {
            let mut offset = 0;
            level
                .into_iter()
                .map(|(indices, open)| {
                    let dim = sheaf.stalk(open).dim();
                    let cell = Cell { indices, open, offset, dim };
                    offset += dim;
                    cell
                })
                .collect()
        })
        .collect();
    let dim = |k: usize| cells[k].iter().map(|c| c.dim).sum::<usize>();
    let mut coboundaries = Vec::with_capacity(max_degree + 1);
    for k in 0..=max_degree {
        let mut d = Matrix::zeros(dim(k + 1), dim(k));
        for sigma in &cells[k + 1] {
            for j in 0..sigma.indices.len() {
                let mut face = sigma.indices.clone();
                face.remove(j);
                let tau = &cells[k][find_cell(&cells[k], &face).expect("faces of nonempty cells are nonempty")];
                let m = sheaf.linear_matrix(tau.open, sigma.open)?;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                for r in 0..sigma.dim {
                    for c in 0..tau.dim {
                        d[(sigma.offset + r, tau.offset + c)] += sign * m[(r, c)];
                    }
                }
            }
        }
        coboundaries.push(d);
    }
    Ok(CochainComplex { cover, cells, coboundaries })
}

/// Per-degree cochain dimensions, coboundary ranks and Betti numbers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BettiTable {
    /// One row per degree, starting at 0.
    pub rows: Vec<BettiRow>,
}

/// One degree of a [`BettiTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BettiRow {
    /// Degree `k`.
    pub degree: usize,
    /// `dim C^k`.
    pub cochain_dim: usize,
    /// `rank d^k`.
    pub rank: usize,
    /// `dim C^k − rank d^k − rank d^{k−1}`.
    pub betti: usize,
}

impl BettiTable {
    pub(crate) fn from_ranks(dims: &[usize], ranks: &[usize]) -> Self {
        let rows = dims
            .iter()
            .zip(ranks)
            .enumerate()
            .map(|(k, (&dim, &rank))| {
                let below = if k == 0 { 0 } else { ranks[k - 1] };
                BettiRow { degree: k, cochain_dim: dim, rank, betti: dim - rank - below }
            })
            .collect();
        Self { rows }
    }

    /// Betti numbers by degree.
    pub fn betti_numbers(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.betti).collect()
    }
}

/// Betti numbers of a linear sheaf on a cover, for degrees `0..=max_degree`.
pub fn betti(sheaf: &Sheaf, cover: &Cover, max_degree: usize) -> Result<BettiTable> {
    Ok(build_complex(sheaf, cover, max_degree)?.betti())
}

/// Basis (as columns) of the kernel of `d^0` on the cover by every nonempty open, i.e. of
/// the space of global sections written as one value per open.
pub fn global_sections_via_h0(sheaf: &Sheaf) -> Result<Matrix> {
    let complex = build_complex(sheaf, &Cover::all_opens(sheaf.topology()), 0)?;
    let d0 = complex.coboundary(0).expect("degree 0 is always built");
    Ok(d0.nullspace())
}
