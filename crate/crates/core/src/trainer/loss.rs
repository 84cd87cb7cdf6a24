//! Fitting loss of the linear network and its exact gradient.
//!
//! The gradient is obtained by a hand-written reverse sweep through the
//! laminate chain of every node. The shift `λ` is held fixed, which is exact
//! because the laminate output does not depend on it.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Sample;
use crate::dmn::{default_shift, random_direction, Child, Topology, TreeShape};
use crate::error::{Error, Result};
use crate::tensor::{lamination_projector, lamination_projector_derivative, Mat6, UnitVector3, Vec3};

/// Trainable parameters: unconstrained direction vectors (normalized on use)
/// and raw leaf weights (clipped at zero on use).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub depth: usize,
    pub directions: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl NetworkParams {
    pub fn random<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Self {
        let n_leaves = 1usize << depth;
        let directions = (0..n_leaves - 1).map(|_| *random_direction(rng).as_vec()).collect();
        let raw: Vec<f64> = (0..n_leaves).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        Self { depth, directions, weights: raw.iter().map(|w| w / total).collect() }
    }

    pub fn from_topology(t: &Topology) -> Self {
        Self {
            depth: t.depth(),
            directions: t.directions().iter().map(|n| *n.as_vec()).collect(),
            weights: t.weights().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        3 * self.directions.len() + self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat layout: all direction components, then all weights.
    pub fn to_vec(&self) -> Vec<f64> {
        self.directions.iter().flat_map(|d| d.iter().copied()).chain(self.weights.iter().copied()).collect()
    }

    pub fn set_from_slice(&mut self, x: &[f64]) {
        let nd = self.directions.len();
        for (i, d) in self.directions.iter_mut().enumerate() {
            *d = Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        }
        self.weights.copy_from_slice(&x[3 * nd..]);
    }

    pub fn clipped_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|v| v.max(0.0)).collect()
    }

    /// Topology with unit directions and clipped weights rescaled to unit sum.
    pub fn to_topology(&self) -> Result<Topology> {
        let directions = self
            .directions
            .iter()
            .map(|d| UnitVector3::normalize(*d))
            .collect::<Result<Vec<_>>>()?;
        Topology::normalized(self.depth, directions, self.clipped_weights())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Entrywise norm exponent of the stiffness error.
    pub p: f64,
    /// Exponent of the batch reduction.
    pub q: f64,
    /// Penalty factor on the deviation of the weight sum from one.
    pub penalty: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { p: 1.0, q: 10.0, penalty: 1e3 }
    }
}

/// Direction-dependent quantities shared by all samples of a batch.
struct Prepared {
    depth: usize,
    projectors: Vec<Mat6>,
    derivatives: Vec<[Mat6; 3]>,
    units: Vec<Vec3>,
    lengths: Vec<f64>,
    leaf_weights: Vec<f64>,
    node_weights: Vec<f64>,
}

impl Prepared {
    fn new(params: &NetworkParams) -> Result<Self> {
        let mut units = Vec::with_capacity(params.directions.len());
        let mut lengths = Vec::with_capacity(params.directions.len());
        for d in &params.directions {
            let u = UnitVector3::normalize(*d)?;
            units.push(*u.as_vec());
            lengths.push(d.norm());
        }
        let projectors = units
            .iter()
            .map(|n| lamination_projector(&UnitVector3::normalize(*n).expect("unit")))
            .collect();
        let derivatives = units.iter().map(lamination_projector_derivative).collect();
        let leaf_weights = params.clipped_weights();
        let shape = TreeShape { depth: params.depth };
        let mut node_weights = vec![0.0; params.directions.len()];
        for node in 0..node_weights.len() {
            node_weights[node] = shape.leaf_range(node).map(|l| leaf_weights[l]).sum();
        }
        Ok(Self { depth: params.depth, projectors, derivatives, units, lengths, leaf_weights, node_weights })
    }

    fn weight(&self, c: Child) -> f64 {
        match c {
            Child::Node(n) => self.node_weights[n],
            Child::Leaf(l) => self.leaf_weights[l],
        }
    }
}

struct NodeTape {
    g: [Mat6; 2],
    m: [Mat6; 2],
    r: Mat6,
    u: Mat6,
    frac: f64,
}

struct Tape {
    nodes: Vec<NodeTape>,
    shift: f64,
}

fn forward(prep: &Prepared, c1: &Mat6, c2: &Mat6, shift: f64) -> Result<(Mat6, Tape)> {
    let shape = TreeShape { depth: prep.depth };
    let n = prep.projectors.len();
    let id = Mat6::identity();
    let inv = |m: Mat6| m.try_inverse().ok_or(Error::Singular("network forward pass"));
    let mut stiffness: Vec<Mat6> = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for node in 0..n {
        let children = shape.children(node);
        let child_c = |c: Child, s: &[Mat6]| match c {
            Child::Leaf(l) if l % 2 == 0 => *c1,
            Child::Leaf(_) => *c2,
            Child::Node(i) => s[i],
        };
        let p = &prep.projectors[node];
        let total = prep.weight(children[0]) + prep.weight(children[1]);
        let frac = if total > 0.0 { prep.weight(children[0]) / total } else { 0.5 };
        let mut g = [Mat6::zeros(); 2];
        let mut m = [Mat6::zeros(); 2];
        for k in 0..2 {
            g[k] = inv(child_c(children[k], &stiffness) - id * shift)?;
            m[k] = inv(p + g[k] * shift)?;
        }
        let s = m[0] * frac + m[1] * (1.0 - frac);
        let r = inv(s)?;
        let u = inv(r - p)?;
        stiffness.push(id * shift + u * shift);
        nodes.push(NodeTape { g, m, r, u, frac });
    }
    Ok((stiffness[n - 1], Tape { nodes, shift }))
}

/// Gradients with respect to the unit directions and the clipped leaf weights.
fn backward(prep: &Prepared, tape: &Tape, output_bar: &Mat6) -> (Vec<Vec3>, Vec<f64>) {
    let shape = TreeShape { depth: prep.depth };
    let n = tape.nodes.len();
    let lambda = tape.shift;
    let mut c_bar = vec![Mat6::zeros(); n];
    c_bar[n - 1] = *output_bar;
    let mut dir_bar = vec![Vec3::zeros(); n];
    let mut node_w_bar = vec![0.0; n];
    let mut leaf_w_bar = vec![0.0; prep.leaf_weights.len()];
    for node in (0..n).rev() {
        let t = &tape.nodes[node];
        let u_bar = c_bar[node] * lambda;
        let t_bar = -t.u.transpose() * u_bar * t.u.transpose();
        let s_bar = -t.r.transpose() * t_bar * t.r.transpose();
        let mut p_bar = -t_bar;
        let frac_bar = s_bar.dot(&(t.m[0] - t.m[1]));
        let children = shape.children(node);
        for k in 0..2 {
            let c = if k == 0 { t.frac } else { 1.0 - t.frac };
            let m_bar = s_bar * c;
            let h_bar = -t.m[k].transpose() * m_bar * t.m[k].transpose();
            p_bar += h_bar;
            let g_bar = h_bar * lambda;
            if let Child::Node(i) = children[k] {
                c_bar[i] += -t.g[k].transpose() * g_bar * t.g[k].transpose();
            }
        }
        let d = &prep.derivatives[node];
        dir_bar[node] = Vec3::new(p_bar.dot(&d[0]), p_bar.dot(&d[1]), p_bar.dot(&d[2]));
        let (wa, wb) = (prep.weight(children[0]), prep.weight(children[1]));
        let total = wa + wb;
        if total > 0.0 {
            let bars = [frac_bar * wb / (total * total), -frac_bar * wa / (total * total)];
            for k in 0..2 {
                match children[k] {
                    Child::Node(i) => node_w_bar[i] += bars[k],
                    Child::Leaf(l) => leaf_w_bar[l] += bars[k],
                }
            }
        }
    }
    for node in 0..n {
        if node_w_bar[node] != 0.0 {
            for l in shape.leaf_range(node) {
                leaf_w_bar[l] += node_w_bar[node];
            }
        }
    }
    (dir_bar, leaf_w_bar)
}

fn lp_norm(m: &Mat6, p: f64) -> f64 {
    if p == 1.0 {
        m.iter().map(|x| x.abs()).sum()
    } else {
        m.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Gradient of `‖x‖_p` with respect to `x`.
fn lp_norm_gradient(x: &Mat6, p: f64) -> Mat6 {
    if p == 1.0 {
        return x.map(|v| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
    }
    let norm = lp_norm(x, p);
    if norm == 0.0 {
        return Mat6::zeros();
    }
    x.map(|v| v.signum() * v.abs().powf(p - 1.0) / norm.powf(p - 1.0))
}

/// Network output for one pair of phase stiffnesses, without the gradient tape.
pub fn network_output(params: &NetworkParams, c1: &Mat6, c2: &Mat6) -> Result<Mat6> {
    let prep = Prepared::new(params)?;
    Ok(forward(&prep, c1, c2, default_shift(c1, c2)?)?.0)
}

/// Relative entrywise `p`-norm error of one sample.
pub fn sample_error(prediction: &Mat6, reference: &Mat6, p: f64) -> f64 {
    lp_norm(&(reference - prediction), p) / lp_norm(reference, p)
}

/// Loss of a batch and its gradient in the flat parameter layout of
/// [`NetworkParams::to_vec`].
pub fn loss_and_gradient(params: &NetworkParams, batch: &[&Sample], cfg: &LossConfig) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let prep = Prepared::new(params)?;
    let forwards: Vec<(Mat6, Tape, f64)> = batch
        .par_iter()
        .map(|s| -> Result<_> {
            let (out, tape) = forward(&prep, &s.c1, &s.c2, default_shift(&s.c1, &s.c2)?)?;
            let e = sample_error(&out, &s.effective, cfg.p);
            Ok((out, tape, e))
        })
        .collect::<Result<_>>()?;
    let nb = batch.len() as f64;
    let e_max = forwards.iter().map(|f| f.2).fold(0.0, f64::max);
    let (fit, scaled_sum) = if e_max > 0.0 {
        let sum: f64 = forwards.iter().map(|f| (f.2 / e_max).powf(cfg.q)).sum();
        (e_max * sum.powf(1.0 / cfg.q) / nb, sum)
    } else {
        (0.0, 0.0)
    };
    let weight_sum: f64 = prep.leaf_weights.iter().sum();
    let loss = fit + cfg.penalty * (weight_sum - 1.0).powi(2);

    let partials: Vec<(Vec<Vec3>, Vec<f64>)> = if e_max > 0.0 {
        batch
            .par_iter()
            .zip(forwards.par_iter())
            .map(|(s, (out, tape, e))| {
                // ∂J/∂e_s, then ∂e_s/∂output
                let de = scaled_sum.powf(1.0 / cfg.q - 1.0) * (e / e_max).powf(cfg.q - 1.0) / nb;
                let grad = lp_norm_gradient(&(s.effective - out), cfg.p) * (-de / lp_norm(&s.effective, cfg.p));
                backward(&prep, tape, &grad)
            })
            .collect()
    } else {
        Vec::new()
    };
    let n_nodes = params.directions.len();
    let mut dir_bar = vec![Vec3::zeros(); n_nodes];
    let mut w_bar = vec![2.0 * cfg.penalty * (weight_sum - 1.0); prep.leaf_weights.len()];
    for (d, w) in &partials {
        for i in 0..n_nodes {
            dir_bar[i] += d[i];
        }
        for l in 0..w_bar.len() {
            w_bar[l] += w[l];
        }
    }
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..n_nodes {
        let n = prep.units[i];
        let tangential = (dir_bar[i] - n * n.dot(&dir_bar[i])) / prep.lengths[i];
        grad.extend(tangential.iter());
    }
    for (l, v) in params.weights.iter().enumerate() {
        grad.push(if *v > 0.0 { w_bar[l] } else { 0.0 });
    }
    Ok((loss, grad))
}

/// Mean relative ℓ¹ error of the network over a set of samples.
pub fn mean_error(params: &NetworkParams, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("mean error of an empty dataset".into()));
    }
    let prep = Prepared::new(params)?;
    let errors: Vec<f64> = samples
        .par_iter()
        .map(|s| -> Result<f64> {
            let out = forward(&prep, &s.c1, &s.c2, default_shift(&s.c1, &s.c2)?)?.0;
            Ok(sample_error(&out, &s.effective, 1.0))
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().sum::<f64>() / samples.len() as f64)
}
