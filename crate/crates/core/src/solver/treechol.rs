//! Block Cholesky factorization for matrices whose sparsity follows the tree:
//! block (q, p) is nonzero only if q = p or q is an ancestor of p. Eliminating
//! children before parents produces no fill outside that pattern.

use crate::error::{Error, Result};
use crate::tensor::{Mat3, Vec3};

/// Ancestor lists and activity flags of the tree nodes.
#[derive(Clone, Debug)]
pub struct TreeStructure {
    /// `ancestors[p][j]` is the ancestor `j + 1` levels above `p`.
    pub ancestors: Vec<Vec<usize>>,
    pub active: Vec<bool>,
}

impl TreeStructure {
    /// Slot of ancestor `q` in the off-diagonal row of `p`, given node levels.
    pub fn slot(level_p: usize, level_q: usize) -> usize {
        level_p - level_q - 1
    }
}

/// Lower block-triangular storage: `diag[p]` and `off[p][j] = K(ancestors[p][j], p)`.
#[derive(Clone, Debug)]
pub struct TreeMatrix {
    pub diag: Vec<Mat3>,
    pub off: Vec<Vec<Mat3>>,
}

impl TreeMatrix {
    pub fn zeros(s: &TreeStructure) -> Self {
        Self {
            diag: s
                .active
                .iter()
                .map(|&a| if a { Mat3::zeros() } else { Mat3::identity() })
                .collect(),
            off: s.ancestors.iter().map(|a| vec![Mat3::zeros(); a.len()]).collect(),
        }
    }

    /// In-place factorization `K = L Lᵀ`. Afterwards `diag[p]` holds `L_pp⁻¹`
    /// and `off[p][j]` holds `L(ancestors[p][j], p)`.
    pub fn factor(mut self, s: &TreeStructure) -> Result<TreeFactor> {
        for p in 0..self.diag.len() {
            let sym = (self.diag[p] + self.diag[p].transpose()) * 0.5;
            let l = sym.cholesky().ok_or(Error::Indefinite { block: p })?.l();
            let linv = l.try_inverse().ok_or(Error::Indefinite { block: p })?;
            self.diag[p] = linv;
            let anc = &s.ancestors[p];
            for j in 0..anc.len() {
                self.off[p][j] *= linv.transpose();
            }
            for j1 in 0..anc.len() {
                let l1 = self.off[p][j1];
                if l1 == Mat3::zeros() {
                    continue;
                }
                let a1 = anc[j1];
                self.diag[a1] -= l1 * l1.transpose();
                for j2 in j1 + 1..anc.len() {
                    let l2 = self.off[p][j2];
                    self.off[a1][j2 - j1 - 1] -= l2 * l1.transpose();
                }
            }
        }
        Ok(TreeFactor { m: self })
    }
}

#[derive(Clone, Debug)]
pub struct TreeFactor {
    m: TreeMatrix,
}

impl TreeFactor {
    /// Solves `K x = b` in place.
    pub fn solve(&self, s: &TreeStructure, b: &mut [Vec3]) {
        let n = b.len();
        for p in 0..n {
            b[p] = self.m.diag[p] * b[p];
            for (j, &a) in s.ancestors[p].iter().enumerate() {
                let l = self.m.off[p][j];
                b[a] -= l * b[p];
            }
        }
        for p in (0..n).rev() {
            let mut y = b[p];
            for (j, &a) in s.ancestors[p].iter().enumerate() {
                y -= self.m.off[p][j].transpose() * b[a];
            }
            b[p] = self.m.diag[p].transpose() * y;
        }
    }
}
