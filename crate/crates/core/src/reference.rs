//! Dense reference solver for network material points.
//!
//! Builds the kinematic operator independently by walking every root-to-leaf
//! path, minimizes the equilibrium residual over all active interface jumps
//! with a Levenberg–Marquardt iteration and computes tangents by dense
//! solves. Slow, but shares no code with the tree-structured solver beyond the
//! phase models.

use nalgebra::{DMatrix, DVector};

use crate::dmn::{Child, Topology};
use crate::error::{Error, Result};
use crate::material::{Gsm, GsmResponse, PhasePair, StepInput};
use crate::solver::{effective_heat_capacity, DmnOutput, DmnState, MaterialPoint};
use crate::tensor::{from_matrix, Mat3, Mat6, Vec3, Vec6};

#[derive(Clone, Debug)]
pub struct ReferenceSolver {
    topology: Topology,
    phases: PhasePair,
    /// `(6 · leaves) × (3 · active nodes)`.
    operator: DMatrix<f64>,
    active: Vec<usize>,
    pub tol: f64,
    pub max_iterations: usize,
}

impl ReferenceSolver {
    pub fn new(topology: Topology, phases: PhasePair) -> Self {
        let active: Vec<usize> = (0..topology.n_nodes()).filter(|&n| topology.is_active(n)).collect();
        let column_of = |node: usize| active.iter().position(|&a| a == node);
        let mut operator = DMatrix::zeros(6 * topology.n_leaves(), 3 * active.len());
        for leaf in 0..topology.n_leaves() {
            let mut from = Child::Leaf(leaf);
            let mut node = Some(topology.leaf_parent(leaf));
            while let Some(p) = node {
                if let Some(col) = column_of(p) {
                    let (c1, c2) = topology.fractions(p);
                    let coeff = if topology.children(p)[0] == from { c2 } else { -c1 };
                    let n = topology.direction(p).as_vec();
                    for k in 0..3 {
                        let mut a = Vec3::zeros();
                        a[k] = 1.0;
                        let outer: Mat3 = a * n.transpose();
                        let e = from_matrix(&((outer + outer.transpose()) * 0.5)) * coeff;
                        for r in 0..6 {
                            operator[(6 * leaf + r, 3 * col + k)] = e[r];
                        }
                    }
                }
                from = Child::Node(p);
                node = topology.parent(p);
            }
        }
        Self { topology, phases, operator, active, tol: 1e-13, max_iterations: 200 }
    }

    fn leaf_strains(&self, strain: &Vec6, x: &DVector<f64>) -> Vec<Vec6> {
        let pert = &self.operator * x;
        (0..self.topology.n_leaves())
            .map(|l| strain + Vec6::from_fn(|r, _| pert[6 * l + r]))
            .collect()
    }

    fn responses(&self, state: &DmnState, strains: &[Vec6], theta: f64, dt: f64) -> Result<Vec<Option<GsmResponse>>> {
        strains
            .iter()
            .enumerate()
            .map(|(l, eps)| {
                if self.topology.weights()[l] == 0.0 {
                    return Ok(None);
                }
                let input = StepInput { strain: *eps, strain_prev: state.leaf_strains[l], theta, dt };
                let phase = self.phases.get(self.topology.leaf_phase(l));
                phase.update(&input, &state.leaf_states[l]).map(Some)
            })
            .collect()
    }

    /// Block diagonal `W C`, weighted stresses and the normalized residual.
    fn linearize(&self, responses: &[Option<GsmResponse>]) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
        let n = 6 * self.topology.n_leaves();
        let mut wc = DMatrix::zeros(n, n);
        let mut ws = DVector::zeros(n);
        let mut mean = Vec6::zeros();
        for (l, r) in responses.iter().enumerate() {
            let Some(r) = r else { continue };
            let w = self.topology.weights()[l];
            wc.view_mut((6 * l, 6 * l), (6, 6)).copy_from(&(r.dstress_dstrain * w));
            ws.rows_mut(6 * l, 6).copy_from(&(r.stress * w));
            mean += r.stress * w;
        }
        let residual = self.operator.transpose() * &ws;
        let scale = self.topology.n_nodes() as f64 * mean.norm().max(1.0);
        let value = residual.norm() / scale;
        (wc, ws, residual, value)
    }
}

impl MaterialPoint for ReferenceSolver {
    type State = DmnState;

    fn initial_state(&self) -> DmnState {
        let n = self.topology.n_leaves();
        DmnState {
            leaf_states: (0..n).map(|l| self.phases.get(self.topology.leaf_phase(l)).initial_state()).collect(),
            jumps: vec![Vec3::zeros(); self.topology.n_nodes()],
            leaf_strains: vec![Vec6::zeros(); n],
            macro_strain: Vec6::zeros(),
        }
    }

    fn evaluate(&self, state: &DmnState, strain: &Vec6, theta: f64, dt: f64) -> Result<(DmnOutput, DmnState)> {
        let m = 3 * self.active.len();
        let mut x = DVector::zeros(m);
        let mut responses = self.responses(state, &self.leaf_strains(strain, &x), theta, dt)?;
        let (mut wc, _, mut r, mut value) = self.linearize(&responses);
        let mut history = vec![value];
        let mut mu = 1e-6;
        let mut iterations = 0;
        while value >= self.tol && m > 0 {
            if iterations >= self.max_iterations {
                return Err(Error::NewtonNonConvergence { history });
            }
            iterations += 1;
            let jac = self.operator.transpose() * &wc * &self.operator;
            let jtj = jac.transpose() * &jac;
            let scale = jtj.diagonal().max().max(1e-300);
            let lhs = &jtj + DMatrix::identity(m, m) * (mu * scale);
            let step = lhs.lu().solve(&(-(jac.transpose() * &r))).ok_or(Error::Singular("reference step"))?;
            let trial_x = &x + step;
            let trial = self.responses(state, &self.leaf_strains(strain, &trial_x), theta, dt)?;
            let (twc, _, tr, tvalue) = self.linearize(&trial);
            if tvalue < value {
                (x, responses, wc, r, value) = (trial_x, trial, twc, tr, tvalue);
                mu = (mu / 3.0).max(1e-16);
            } else {
                mu *= 4.0;
                if mu > 1e12 {
                    return Err(Error::NewtonNonConvergence { history });
                }
            }
            history.push(value);
        }

        let n = 6 * self.topology.n_leaves();
        let at = self.operator.transpose();
        let k = &at * &wc * &self.operator;
        let lu = k.lu();
        let solve = |rhs: DMatrix<f64>| -> Result<DMatrix<f64>> {
            if m == 0 {
                Ok(DMatrix::zeros(0, rhs.ncols()))
            } else {
                lu.solve(&rhs).ok_or(Error::Singular("reference tangent"))
            }
        };
        let weights = self.topology.weights();
        let mut out = DmnOutput {
            stress: Vec6::zeros(),
            coupling: 0.0,
            dissipation: 0.0,
            c_eps: Mat6::zeros(),
            c_theta: Vec6::zeros(),
            d_eps: Vec6::zeros(),
            d_theta: 0.0,
            iterations,
            residual: value,
            residual_history: history,
        };
        let mut dcoupling = DVector::zeros(n);
        let mut stress_theta = DVector::zeros(n);
        for (l, resp) in responses.iter().enumerate() {
            let Some(g) = resp else { continue };
            let w = weights[l];
            dcoupling.rows_mut(6 * l, 6).copy_from(&(g.dcoupling_dstrain * w));
            stress_theta.rows_mut(6 * l, 6).copy_from(&(g.dstress_dtheta * w));
            out.stress += g.stress * w;
            out.coupling += w * g.coupling;
            out.dissipation += w * g.dissipation;
            out.d_theta += w * g.dcoupling_dtheta;
        }
        // sums over leaves as row vectors of the stacked leaf vectors
        let mut ones = DMatrix::zeros(6, n);
        for l in 0..self.topology.n_leaves() {
            ones.view_mut((0, 6 * l), (6, 6)).copy_from(&Mat6::identity());
        }
        let wc_e = &wc * ones.transpose();
        let x_eps = solve(-(&at * &wc_e))?;
        let c_eps = &ones * (&wc_e + &wc * &self.operator * &x_eps);
        out.c_eps = Mat6::from_fn(|i, j| c_eps[(i, j)]);
        let d_eps = &ones * &dcoupling + (&self.operator * &x_eps).transpose() * &dcoupling;
        out.d_eps = Vec6::from_fn(|i, _| d_eps[i]);
        let y = solve(DMatrix::from_column_slice(m, 1, (-(&at * &stress_theta)).as_slice()))?;
        let ay = &self.operator * y.column(0);
        let c_theta = &ones * (&stress_theta + &wc * &ay);
        out.c_theta = Vec6::from_fn(|i, _| c_theta[i]);
        out.d_theta += dcoupling.dot(&ay);

        let strains = self.leaf_strains(strain, &x);
        let mut jumps = vec![Vec3::zeros(); self.topology.n_nodes()];
        for (i, &node) in self.active.iter().enumerate() {
            jumps[node] = Vec3::new(x[3 * i], x[3 * i + 1], x[3 * i + 2]);
        }
        let mut leaf_states = state.leaf_states.clone();
        for (l, resp) in responses.into_iter().enumerate() {
            if let Some(g) = resp {
                leaf_states[l] = g.state;
            }
        }
        Ok((out, DmnState { leaf_states, jumps, leaf_strains: strains, macro_strain: *strain }))
    }

    fn heat_capacity(&self) -> f64 {
        effective_heat_capacity(&self.topology, &self.phases)
    }
}
