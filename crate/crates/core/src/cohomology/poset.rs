//! Cohomology of a sheaf on the whole finite space, independent of any cover.
//!
//! A sheaf on a finite space is determined by its values on the minimal opens `U_x`, and
//! its cohomology is the derived limit over the poset of those opens. The complex used here
//! has one block per strictly decreasing chain `p_0 ⊋ p_1 ⊋ … ⊋ p_k` of minimal opens,
//! valued in the stalk of the last element, with
//!
//! `(d c)(p_0…p_{k+1}) = Σ_{i≤k} (−1)^i c(p_0…p̂_i…p_{k+1}) + (−1)^{k+1} S(p_{k+1} ⊆ p_k) c(p_0…p_k)`.

use alloc::vec::Vec;

use super::BettiTable;
use crate::linalg::Matrix;
use crate::sheaf::Sheaf;
use crate::topology::OpenId;
use crate::{Error, Result};

/// Chain complex over the poset of minimal opens contained in some open.
#[derive(Debug, Clone)]
pub struct PosetComplex {
    /// The minimal opens used, in canonical order.
    pub poset: Vec<OpenId>,
    chains: Vec<Vec<(Vec<OpenId>, usize)>>,
    coboundaries: Vec<Matrix>,
}

impl PosetComplex {
    /// Builds the complex over the minimal opens inside `within`, up to `d^max_degree`.
    pub fn build(sheaf: &Sheaf, within: OpenId, max_degree: usize) -> Result<Self> {
        if !sheaf.is_linear() {
            return Err(Error::NonlinearSheaf);
        }
        let t = sheaf.topology();
        let poset: Vec<OpenId> = t.minimal_opens().into_iter().filter(|&p| t.is_subset(p, within)).collect();
        let mut chains: Vec<Vec<(Vec<OpenId>, usize)>> = Vec::new();
        let mut current: Vec<Vec<OpenId>> = poset.iter().map(|&p| alloc::vec![p]).collect();
        for _ in 0..=max_degree + 1 {
            let mut level = Vec::with_capacity(current.len());
            let mut offset = 0;
            for chain in &current {
                level.push((chain.clone(), offset));
                offset += sheaf.stalk(*chain.last().expect("chains are nonempty")).dim();
            }
            chains.push(level);
            let mut next = Vec::new();
            for chain in &current {
                let last = *chain.last().expect("chains are nonempty");
                for &p in &poset {
                    if p != last && t.is_subset(p, last) {
                        let mut c = chain.clone();
                        c.push(p);
                        next.push(c);
                    }
                }
            }
            current = next;
        }
        for level in &mut chains {
            level.sort_by(|a, b| a.0.cmp(&b.0));
            let mut offset = 0;
            for entry in level.iter_mut() {
                entry.1 = offset;
                offset += sheaf.stalk(*entry.0.last().expect("chains are nonempty")).dim();
            }
        }
        let dim = |level: &[(Vec<OpenId>, usize)]| -> usize {
            level.iter().map(|(c, _)| sheaf.stalk(*c.last().expect("nonempty")).dim()).sum()
        };
        let mut coboundaries = Vec::with_capacity(max_degree + 1);
        for k in 0..=max_degree {
            let (lower, upper) = (&chains[k], &chains[k + 1]);
            let mut d = Matrix::zeros(dim(upper), dim(lower));
            for (chain, row) in upper {
                let end = *chain.last().expect("nonempty");
                let rows = sheaf.stalk(end).dim();
                for i in 0..chain.len() {
                    let mut face = chain.clone();
                    face.remove(i);
                    let col = lower[lower.binary_search_by(|e| e.0.cmp(&face)).expect("faces of chains are chains")].1;
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let face_end = *face.last().expect("nonempty");
                    let m = sheaf.linear_matrix(face_end, end)?;
                    for r in 0..rows {
                        for c in 0..m.cols() {
                            d[(row + r, col + c)] += sign * m[(r, c)];
                        }
                    }
                }
            }
            coboundaries.push(d);
        }
        Ok(Self { poset, chains, coboundaries })
    }

    /// Number of chains of length `k + 1`.
    pub fn chain_count(&self, k: usize) -> usize {
        self.chains.get(k).map_or(0, Vec::len)
    }

    /// Largest entry of `d^{k+1} d^k`.
    pub fn dd_residual(&self) -> f64 {
        self.coboundaries.windows(2).map(|w| w[1].mul(&w[0]).max_abs()).fold(0.0, f64::max)
    }

    /// Betti numbers for degrees `0..=max_degree`.
    pub fn betti(&self) -> BettiTable {
        let ranks: Vec<usize> = self.coboundaries.iter().map(Matrix::rank).collect();
        let dims: Vec<usize> = self.coboundaries.iter().map(Matrix::cols).collect();
        BettiTable::from_ranks(&dims, &ranks)
    }
}

/// Cohomology of a linear sheaf on its whole topology, for degrees `0..=max_degree`.
pub fn topology_betti(sheaf: &Sheaf, max_degree: usize) -> Result<BettiTable> {
    Ok(PosetComplex::build(sheaf, sheaf.topology().whole(), max_degree)?.betti())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{build_obstacle_sheaves, circle_sheaf, pseudocircle_suspension, ObstacleParams};

    #[test]
    fn circle_has_one_loop() {
        let s = circle_sheaf(4).unwrap();
        assert_eq!(topology_betti(&s, 2).unwrap().betti_numbers(), alloc::vec![1, 1, 0]);
    }

    #[test]
    fn obstacle_p_matches_its_cover() {
        let (m, p) = build_obstacle_sheaves(ObstacleParams::default()).unwrap();
        assert_eq!(topology_betti(&p, 2).unwrap().betti_numbers(), alloc::vec![3, 1, 0]);
        let mb = topology_betti(&m, 1).unwrap().betti_numbers();
        assert_eq!(mb[1], 0);
    }

    #[test]
    fn suspension_has_a_two_sphere() {
        let s = pseudocircle_suspension().unwrap();
        let c = PosetComplex::build(&s, s.topology().whole(), 3).unwrap();
        assert!(c.dd_residual() <= 1e-12);
        assert_eq!(c.betti().betti_numbers(), alloc::vec![1, 0, 1, 0]);
    }
}
