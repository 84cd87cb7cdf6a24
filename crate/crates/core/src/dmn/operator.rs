use nalgebra::DMatrix;

use super::topology::Topology;
use crate::tensor::{sym_dyad, Mat63, Vec3, Vec6};

/// Contribution of one node's jump to one leaf strain: `coeff · sym(a ⊗ n)`.
#[derive(Clone, Debug)]
pub struct Term {
    pub node: usize,
    pub coeff: f64,
    pub dyad: Mat63,
}

/// Maps interface jumps (one 3-vector per node) to leaf strain perturbations.
///
/// Leaves in a node's first subtree receive `+c₂ sym(a ⊗ n)`, leaves in the
/// second subtree `−c₁ sym(a ⊗ n)`. Only active nodes contribute, and each
/// leaf's terms are ordered from its deepest ancestor up to the root.
#[derive(Clone, Debug)]
pub struct GradientOperator {
    terms: Vec<Vec<Term>>,
    weights: Vec<f64>,
    active: Vec<bool>,
}

impl GradientOperator {
    pub fn new(topology: &Topology) -> Self {
        let mut terms = vec![Vec::new(); topology.n_leaves()];
        let active: Vec<bool> = (0..topology.n_nodes()).map(|n| topology.is_active(n)).collect();
        for node in 0..topology.n_nodes() {
            if !active[node] {
                continue;
            }
            let (c1, c2) = topology.fractions(node);
            let dyad = sym_dyad(topology.direction(node).as_vec());
            let range = topology.leaf_range(node);
            let mid = range.start + range.len() / 2;
            for leaf in range {
                let coeff = if leaf < mid { c2 } else { -c1 };
                terms[leaf].push(Term { node, coeff, dyad });
            }
        }
        Self { terms, weights: topology.weights().to_vec(), active }
    }

    pub fn n_nodes(&self) -> usize {
        self.active.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.terms.len()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.active[node]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn leaf_terms(&self, leaf: usize) -> &[Term] {
        &self.terms[leaf]
    }

    pub fn apply_leaf(&self, leaf: usize, jumps: &[Vec3]) -> Vec6 {
        self.terms[leaf]
            .iter()
            .fold(Vec6::zeros(), |acc, t| acc + t.dyad * jumps[t.node] * t.coeff)
    }

    /// Leaf strain perturbations `A a`.
    pub fn apply(&self, jumps: &[Vec3]) -> Vec<Vec6> {
        (0..self.n_leaves()).map(|l| self.apply_leaf(l, jumps)).collect()
    }

    /// Weighted adjoint `Aᵀ W s`.
    pub fn apply_weighted_transpose(&self, leaf_values: &[Vec6]) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); self.n_nodes()];
        for (leaf, terms) in self.terms.iter().enumerate() {
            let w = self.weights[leaf];
            if w == 0.0 {
                continue;
            }
            for t in terms {
                out[t.node] += t.dyad.transpose() * leaf_values[leaf] * (w * t.coeff);
            }
        }
        out
    }

    /// Dense matrix of shape `(6 · leaves) × (3 · nodes)`.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(6 * self.n_leaves(), 3 * self.n_nodes());
        for (leaf, terms) in self.terms.iter().enumerate() {
            for t in terms {
                let block = t.dyad * t.coeff;
                m.view_mut((6 * leaf, 3 * t.node), (6, 3)).copy_from(&block);
            }
        }
        m
    }
}
