use std::ops::Range;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{UnitVector3, Vec3};

/// Weights at or below this value mark a node or leaf as degenerate.
pub const WEIGHT_EPS: f64 = 1e-12;

pub const MODEL_VERSION: &str = "thermodmn-model/1";

/// Child of a laminate node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Child {
    Node(usize),
    Leaf(usize),
}

/// Index arithmetic of a perfect binary tree of depth `K`.
///
/// Nodes are stored level by level from the deepest level `K` up to the root,
/// which is the last node. Within a level, nodes are ordered left to right.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeShape {
    pub depth: usize,
}

impl TreeShape {
    pub fn n_nodes(&self) -> usize {
        (1 << self.depth) - 1
    }

    /// Storage index of the `i`-th (0-based) node on level `k` (root is level 1).
    pub fn node_index(&self, level: usize, i: usize) -> usize {
        debug_assert!((1..=self.depth).contains(&level) && i < 1 << (level - 1));
        (1 << self.depth) - (1 << level) + i
    }

    /// Level and in-level position of a node.
    pub fn level_of(&self, node: usize) -> (usize, usize) {
        let mut level = self.depth;
        let mut start = 0;
        loop {
            let size = 1 << (level - 1);
            if node < start + size {
                return (level, node - start);
            }
            start += size;
            level -= 1;
        }
    }

    pub fn children(&self, node: usize) -> [Child; 2] {
        let (level, i) = self.level_of(node);
        if level == self.depth {
            [Child::Leaf(2 * i), Child::Leaf(2 * i + 1)]
        } else {
            let first = self.node_index(level + 1, 2 * i);
            [Child::Node(first), Child::Node(first + 1)]
        }
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        let (level, i) = self.level_of(node);
        (level > 1).then(|| self.node_index(level - 1, i / 2))
    }

    /// Leaves below a node, as a contiguous index range.
    pub fn leaf_range(&self, node: usize) -> Range<usize> {
        let (level, i) = self.level_of(node);
        let size = 1 << (self.depth - level + 1);
        i * size..(i + 1) * size
    }
}

/// Perfect binary tree of laminates, stored in [`TreeShape`] order.
/// Leaves with even (0-based) index carry phase one, odd leaves phase two.
#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    depth: usize,
    directions: Vec<UnitVector3>,
    weights: Vec<f64>,
    node_weights: Vec<f64>,
}

impl Topology {
    /// Validates a tree whose leaf weights already sum to one.
    pub fn new(depth: usize, directions: Vec<UnitVector3>, weights: Vec<f64>) -> Result<Self> {
        let t = Self::unchecked(depth, directions, weights)?;
        let total: f64 = t.weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("leaf weights sum to {total}, expected 1")));
        }
        Ok(t)
    }

    /// Rescales nonnegative weights to unit sum.
    pub fn normalized(depth: usize, directions: Vec<UnitVector3>, weights: Vec<f64>) -> Result<Self> {
        let t = Self::unchecked(depth, directions, weights)?;
        let total: f64 = t.weights.iter().sum();
        Self::new(depth, t.directions, t.weights.iter().map(|w| w / total).collect())
    }

    fn unchecked(depth: usize, directions: Vec<UnitVector3>, weights: Vec<f64>) -> Result<Self> {
        if !(1..=20).contains(&depth) {
            return Err(Error::InvalidInput(format!("depth {depth} outside 1..=20")));
        }
        let n_leaves = 1usize << depth;
        if directions.len() != n_leaves - 1 {
            return Err(Error::InvalidInput(format!(
                "depth {depth} needs {} directions, got {}",
                n_leaves - 1,
                directions.len()
            )));
        }
        if weights.len() != n_leaves {
            return Err(Error::InvalidInput(format!(
                "depth {depth} needs {n_leaves} weights, got {}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("leaf weights sum to zero".into()));
        }
        let mut t = Self { depth, directions, weights, node_weights: vec![0.0; n_leaves - 1] };
        for node in 0..t.n_nodes() {
            let w = t.child_weight(t.children(node)[0]) + t.child_weight(t.children(node)[1]);
            t.node_weights[node] = w;
        }
        Ok(t)
    }

    /// Random directions uniform on the sphere and weights uniform on [0, 1],
    /// rescaled to unit sum.
    pub fn random<R: Rng + ?Sized>(depth: usize, rng: &mut R) -> Result<Self> {
        let n_leaves = 1usize << depth;
        let directions = (0..n_leaves - 1).map(|_| random_direction(rng)).collect();
        let weights = (0..n_leaves).map(|_| rng.gen::<f64>()).collect();
        Self::normalized(depth, directions, weights)
    }

    /// Random tree whose phase-one leaves hold a total weight of `fraction1`.
    pub fn random_with_fraction<R: Rng + ?Sized>(depth: usize, fraction1: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction1) {
            return Err(Error::InvalidInput(format!("phase fraction {fraction1} outside [0, 1]")));
        }
        let t = Self::random(depth, rng)?;
        let (f1, f2) = t.phase_fractions();
        let weights = t
            .weights
            .iter()
            .enumerate()
            .map(|(l, w)| if l % 2 == 0 { w * fraction1 / f1 } else { w * (1.0 - fraction1) / f2 })
            .collect();
        Self::normalized(depth, t.directions, weights)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_nodes(&self) -> usize {
        self.directions.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.weights.len()
    }

    pub fn directions(&self) -> &[UnitVector3] {
        &self.directions
    }

    pub fn direction(&self, node: usize) -> &UnitVector3 {
        &self.directions[node]
    }

    /// Leaf weights (phase volume fractions of the leaves).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node_weight(&self, node: usize) -> f64 {
        self.node_weights[node]
    }

    pub fn shape(&self) -> TreeShape {
        TreeShape { depth: self.depth }
    }

    pub fn node_index(&self, level: usize, i: usize) -> usize {
        self.shape().node_index(level, i)
    }

    pub fn level_of(&self, node: usize) -> (usize, usize) {
        self.shape().level_of(node)
    }

    pub fn root(&self) -> usize {
        self.n_nodes() - 1
    }

    pub fn children(&self, node: usize) -> [Child; 2] {
        self.shape().children(node)
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.shape().parent(node)
    }

    /// Parent node of a leaf.
    pub fn leaf_parent(&self, leaf: usize) -> usize {
        self.node_index(self.depth, leaf / 2)
    }

    pub fn leaf_range(&self, node: usize) -> Range<usize> {
        self.shape().leaf_range(node)
    }

    pub fn child_weight(&self, child: Child) -> f64 {
        match child {
            Child::Node(n) => self.node_weights[n],
            Child::Leaf(l) => self.weights[l],
        }
    }

    /// Volume fractions `(c₁, c₂)` of the two children. Degenerate nodes get ½ each.
    pub fn fractions(&self, node: usize) -> (f64, f64) {
        let w = self.node_weights[node];
        if w <= WEIGHT_EPS {
            return (0.5, 0.5);
        }
        let [a, b] = self.children(node);
        let c1 = self.child_weight(a) / w;
        let c2 = self.child_weight(b) / w;
        (c1, c2)
    }

    pub fn is_degenerate(&self, node: usize) -> bool {
        self.node_weights[node] <= WEIGHT_EPS
    }

    /// A node carries an interface jump only if both children have weight.
    pub fn is_active(&self, node: usize) -> bool {
        self.children(node).iter().all(|c| self.child_weight(*c) > WEIGHT_EPS)
    }

    pub fn leaf_phase(&self, leaf: usize) -> usize {
        leaf % 2
    }

    /// Total volume fractions of phase one and phase two.
    pub fn phase_fractions(&self) -> (f64, f64) {
        let first: f64 = self.weights.iter().step_by(2).sum();
        let second: f64 = self.weights.iter().skip(1).step_by(2).sum();
        (first, second)
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.depth, self.directions.clone(), weights)
    }

    pub fn to_model(&self, config_sha256: Option<String>) -> ModelFile {
        ModelFile {
            version: MODEL_VERSION.to_string(),
            depth: self.depth,
            directions: self
                .directions
                .iter()
                .map(|n| {
                    let v = n.canonical();
                    [v.as_vec()[0], v.as_vec()[1], v.as_vec()[2]]
                })
                .collect(),
            weights: self.weights.clone(),
            config_sha256,
        }
    }
}

pub fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> UnitVector3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if let Ok(n) = UnitVector3::normalize(v) {
            if v.norm() > 1e-8 {
                return n;
            }
        }
    }
}

/// Serialized network. Directions follow node storage order (deepest level first).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: String,
    pub depth: usize,
    pub directions: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
}

impl ModelFile {
    pub fn topology(&self) -> Result<Topology> {
        if self.version != MODEL_VERSION {
            return Err(Error::Schema(format!("unsupported model version {:?}", self.version)));
        }
        let directions = self
            .directions
            .iter()
            .map(|d| UnitVector3::new(Vec3::new(d[0], d[1], d[2])))
            .collect::<Result<Vec<_>>>()?;
        Topology::new(self.depth, directions, self.weights.clone())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
