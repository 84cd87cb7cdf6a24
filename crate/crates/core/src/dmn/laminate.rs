use super::topology::{Child, Topology};
use crate::error::{Error, Result};
use crate::tensor::{eig_sym, lamination_projector, Mat6, UnitVector3};

/// Default shift: twice the largest eigenvalue of the two phases.
pub fn default_shift(c1: &Mat6, c2: &Mat6) -> Result<f64> {
    let top = eig_sym(c1)?[5].max(eig_sym(c2)?[5]);
    if !(top > 0.0) {
        return Err(Error::InvalidInput("laminate phases must have a positive eigenvalue".into()));
    }
    Ok(2.0 * top)
}

/// Effective stiffness of a two-phase laminate with normal `n` and volume
/// fraction `frac1` of the first phase.
pub fn laminate_stiffness(c1: &Mat6, c2: &Mat6, n: &UnitVector3, frac1: f64) -> Result<Mat6> {
    laminate_stiffness_with_shift(c1, c2, n, frac1, default_shift(c1, c2)?)
}

/// Same as [`laminate_stiffness`] with an explicit shift `λ`, which must not be
/// an eigenvalue of either phase.
pub fn laminate_stiffness_with_shift(
    c1: &Mat6,
    c2: &Mat6,
    n: &UnitVector3,
    frac1: f64,
    shift: f64,
) -> Result<Mat6> {
    if !(0.0..=1.0).contains(&frac1) {
        return Err(Error::InvalidInput(format!("volume fraction {frac1} outside [0, 1]")));
    }
    let p = lamination_projector(n);
    let id = Mat6::identity();
    let inv = |m: Mat6, what| m.try_inverse().ok_or(Error::Singular(what));
    let resolvent = |c: &Mat6| -> Result<Mat6> {
        let g = inv(c - id * shift, "shifted phase stiffness")?;
        inv(p + g * shift, "phase interface operator")
    };
    let mixed = resolvent(c1)? * frac1 + resolvent(c2)? * (1.0 - frac1);
    let t = inv(mixed, "mixed interface operator")? - p;
    let u = inv(t, "effective interface operator")?;
    let c = id * shift + u * shift;
    Ok((c + c.transpose()) * 0.5)
}

/// Linear elastic homogenization through the tree: phase stiffnesses are
/// assigned to alternating leaves and laminated bottom-up.
pub fn homogenize_linear(topology: &Topology, c1: &Mat6, c2: &Mat6) -> Result<Mat6> {
    let shift = default_shift(c1, c2)?;
    let mut node_stiffness = vec![Mat6::zeros(); topology.n_nodes()];
    let stiffness_of = |child: Child, nodes: &[Mat6]| match child {
        Child::Leaf(l) if l % 2 == 0 => *c1,
        Child::Leaf(_) => *c2,
        Child::Node(i) => nodes[i],
    };
    for node in 0..topology.n_nodes() {
        let [a, b] = topology.children(node);
        let (ca, cb) = (stiffness_of(a, &node_stiffness), stiffness_of(b, &node_stiffness));
        node_stiffness[node] = if topology.is_active(node) {
            let (frac, _) = topology.fractions(node);
            laminate_stiffness_with_shift(&ca, &cb, topology.direction(node), frac, shift)?
        } else if topology.child_weight(b) > topology.child_weight(a) {
            cb
        } else {
            ca
        };
    }
    Ok(node_stiffness[topology.root()])
}
