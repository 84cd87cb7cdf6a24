//! Online evaluation of a deep material network: Newton iterations on the
//! interface jumps, effective outputs and algorithmic tangents.

mod treechol;

pub use treechol::{TreeFactor, TreeMatrix, TreeStructure};

use crate::dmn::{GradientOperator, Topology};
use crate::error::{Error, Result};
use crate::material::{Gsm, GsmResponse, MaterialState, PhasePair, StepInput};
use crate::tensor::{Mat6, Mat63, Vec3, Vec6};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iterations: usize,
    pub max_backtracks: usize,
    /// Step reduction factor of the backtracking line search.
    pub backtrack_factor: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-12, max_iterations: 50, max_backtracks: 8, backtrack_factor: 0.5 }
    }
}

/// Converged state of a network material point.
#[derive(Clone, Debug, PartialEq)]
pub struct DmnState {
    pub leaf_states: Vec<MaterialState>,
    /// Interface jumps, used as the starting guess of the next step.
    pub jumps: Vec<Vec3>,
    pub leaf_strains: Vec<Vec6>,
    pub macro_strain: Vec6,
}

/// Effective response of one time step.
#[derive(Clone, Debug)]
pub struct DmnOutput {
    pub stress: Vec6,
    /// Effective thermomechanical coupling term [MPa/s].
    pub coupling: f64,
    pub dissipation: f64,
    /// ∂σ/∂ε
    pub c_eps: Mat6,
    /// ∂σ/∂θ
    pub c_theta: Vec6,
    /// ∂ρ/∂ε
    pub d_eps: Vec6,
    /// ∂ρ/∂θ
    pub d_theta: f64,
    pub iterations: usize,
    pub residual: f64,
    pub residual_history: Vec<f64>,
}

/// A homogenized material point that can be stepped in time.
pub trait MaterialPoint {
    type State: Clone;

    fn initial_state(&self) -> Self::State;

    /// Advances one implicit step. The input state is never modified, so a
    /// failed step can be retried with a smaller time increment.
    fn evaluate(&self, state: &Self::State, strain: &Vec6, theta: f64, dt: f64) -> Result<(DmnOutput, Self::State)>;

    /// Effective heat capacity at constant strain [J m⁻³ K⁻¹].
    fn heat_capacity(&self) -> f64;
}

/// Backtracking on the step length. `residual_at(s)` evaluates the residual at
/// `a + s Δa`. Starting from the full step, the step is reduced by
/// `γⁱ(1 − γ)` while the residual does not decrease. Returns the accepted step
/// length and its residual; the last trial is accepted even without decrease.
pub fn backtrack<F>(mut residual_at: F, previous: f64, config: &NewtonConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let gamma = config.backtrack_factor;
    let mut step = 1.0;
    let mut res = residual_at(step)?;
    let mut i = 0;
    while res >= previous && i < config.max_backtracks {
        step -= gamma.powi(i as i32) * (1.0 - gamma);
        res = residual_at(step)?;
        i += 1;
    }
    Ok((step, res))
}

/// Effective heat capacity `Σ wᵢ c₀,ᵢ` [J m⁻³ K⁻¹].
pub fn effective_heat_capacity(topology: &Topology, phases: &PhasePair) -> f64 {
    topology
        .weights()
        .iter()
        .enumerate()
        .map(|(l, w)| w * phases.get(topology.leaf_phase(l)).heat_capacity())
        .sum()
}

#[derive(Clone, Debug)]
pub struct DmnSolver {
    topology: Topology,
    operator: GradientOperator,
    phases: PhasePair,
    structure: TreeStructure,
    levels: Vec<usize>,
    config: NewtonConfig,
}

impl DmnSolver {
    pub fn new(topology: Topology, phases: PhasePair) -> Self {
        Self::with_config(topology, phases, NewtonConfig::default())
    }

    pub fn with_config(topology: Topology, phases: PhasePair, config: NewtonConfig) -> Self {
        let operator = GradientOperator::new(&topology);
        let levels = (0..topology.n_nodes()).map(|n| topology.level_of(n).0).collect();
        let ancestors = (0..topology.n_nodes())
            .map(|n| std::iter::successors(topology.parent(n), |&q| topology.parent(q)).collect())
            .collect();
        let active = (0..topology.n_nodes()).map(|n| operator.is_active(n)).collect();
        Self {
            topology,
            operator,
            phases,
            structure: TreeStructure { ancestors, active },
            levels,
            config,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn operator(&self) -> &GradientOperator {
        &self.operator
    }

    pub fn phases(&self) -> &PhasePair {
        &self.phases
    }

    pub fn config(&self) -> &NewtonConfig {
        &self.config
    }

    fn phase(&self, leaf: usize) -> &crate::material::Phase {
        self.phases.get(self.topology.leaf_phase(leaf))
    }

    fn leaf_input(&self, state: &DmnState, leaf: usize, strain: Vec6, theta: f64, dt: f64) -> StepInput {
        StepInput { strain, strain_prev: state.leaf_strains[leaf], theta, dt }
    }

    fn leaf_strains(&self, strain: &Vec6, jumps: &[Vec3]) -> Vec<Vec6> {
        (0..self.operator.n_leaves()).map(|l| strain + self.operator.apply_leaf(l, jumps)).collect()
    }

    /// Stresses of all weighted leaves and the normalized equilibrium residual.
    fn residual(
        &self,
        state: &DmnState,
        strains: &[Vec6],
        theta: f64,
        dt: f64,
    ) -> Result<(Vec<Vec3>, f64)> {
        let weights = self.operator.weights();
        let mut stresses = vec![Vec6::zeros(); strains.len()];
        let mut mean = Vec6::zeros();
        for (l, eps) in strains.iter().enumerate() {
            if weights[l] == 0.0 {
                continue;
            }
            let input = self.leaf_input(state, l, *eps, theta, dt);
            stresses[l] = self.phase(l).stress(&input, &state.leaf_states[l])?;
            mean += stresses[l] * weights[l];
        }
        let r = self.operator.apply_weighted_transpose(&stresses);
        let norm = r.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        Ok((r, norm / (self.operator.n_nodes() as f64 * mean.norm().max(1.0))))
    }

    fn full_updates(&self, state: &DmnState, strains: &[Vec6], theta: f64, dt: f64) -> Result<Vec<Option<GsmResponse>>> {
        let weights = self.operator.weights();
        strains
            .iter()
            .enumerate()
            .map(|(l, eps)| {
                if weights[l] == 0.0 {
                    return Ok(None);
                }
                let input = self.leaf_input(state, l, *eps, theta, dt);
                self.phase(l).update(&input, &state.leaf_states[l]).map(Some)
            })
            .collect()
    }

    /// Newton matrix `Aᵀ W C A` from the leaf tangents.
    fn assemble(&self, responses: &[Option<GsmResponse>]) -> TreeMatrix {
        let mut m = TreeMatrix::zeros(&self.structure);
        let weights = self.operator.weights();
        for (l, resp) in responses.iter().enumerate() {
            let Some(resp) = resp else { continue };
            let w = weights[l];
            let c = (resp.dstress_dstrain + resp.dstress_dstrain.transpose()) * 0.5;
            let terms = self.operator.leaf_terms(l);
            let cb: Vec<Mat63> = terms.iter().map(|t| c * t.dyad * (t.coeff * w)).collect();
            for (i, ti) in terms.iter().enumerate() {
                let bi = ti.dyad.transpose() * ti.coeff;
                m.diag[ti.node] += bi * cb[i];
                for tj in &terms[i + 1..] {
                    let slot = TreeStructure::slot(self.levels[ti.node], self.levels[tj.node]);
                    m.off[ti.node][slot] += tj.dyad.transpose() * cb[i] * tj.coeff;
                }
            }
        }
        m
    }

    fn solve_newton(&self, factor: &TreeFactor, rhs: &[Vec3]) -> Vec<Vec3> {
        let mut x = rhs.to_vec();
        factor.solve(&self.structure, &mut x);
        x
    }

    fn weighted_transpose_of(&self, responses: &[Option<GsmResponse>], f: impl Fn(&GsmResponse) -> Vec6) -> Vec<Vec3> {
        let leaf_values: Vec<Vec6> =
            responses.iter().map(|r| r.as_ref().map_or(Vec6::zeros(), &f)).collect();
        self.operator.apply_weighted_transpose(&leaf_values)
    }
}

impl MaterialPoint for DmnSolver {
    type State = DmnState;

    fn initial_state(&self) -> DmnState {
        let n_leaves = self.topology.n_leaves();
        DmnState {
            leaf_states: (0..n_leaves).map(|l| self.phase(l).initial_state()).collect(),
            jumps: vec![Vec3::zeros(); self.topology.n_nodes()],
            leaf_strains: vec![Vec6::zeros(); n_leaves],
            macro_strain: Vec6::zeros(),
        }
    }

    fn evaluate(&self, state: &DmnState, strain: &Vec6, theta: f64, dt: f64) -> Result<(DmnOutput, DmnState)> {
        if !(dt > 0.0) || !(theta > 0.0) {
            return Err(Error::InvalidInput(format!("need Δt > 0 and θ > 0, got Δt = {dt}, θ = {theta}")));
        }
        let cfg = &self.config;
        let mut jumps = state.jumps.clone();
        for (n, a) in jumps.iter_mut().enumerate() {
            if !self.operator.is_active(n) {
                *a = Vec3::zeros();
            }
        }
        let mut strains = self.leaf_strains(strain, &jumps);
        let (mut r, mut res) = self.residual(state, &strains, theta, dt)?;
        let mut history = vec![res];
        let mut iterations = 0;
        while iterations == 0 || res >= cfg.tol {
            if iterations >= cfg.max_iterations {
                return Err(Error::NewtonNonConvergence { history });
            }
            let responses = self.full_updates(state, &strains, theta, dt)?;
            let factor = self.assemble(&responses).factor(&self.structure)?;
            let rhs: Vec<Vec3> = r.iter().map(|v| -v).collect();
            let delta = self.solve_newton(&factor, &rhs);
            iterations += 1;
            if delta.iter().all(|d| d.norm_squared() == 0.0) {
                history.push(res);
                continue;
            }
            let mut trial = (jumps.clone(), strains.clone(), r.clone());
            let (_, new_res) = backtrack(
                |step| {
                    let a: Vec<Vec3> = jumps.iter().zip(&delta).map(|(a, d)| a + d * step).collect();
                    let s = self.leaf_strains(strain, &a);
                    let (rr, value) = self.residual(state, &s, theta, dt)?;
                    trial = (a, s, rr);
                    Ok(value)
                },
                res,
                cfg,
            )?;
            (jumps, strains, r) = trial;
            res = new_res;
            history.push(res);
        }

        // converged: outputs and tangents at the final point
        let responses = self.full_updates(state, &strains, theta, dt)?;
        let factor = self.assemble(&responses).factor(&self.structure)?;
        let weights = self.operator.weights();
        let n_leaves = self.operator.n_leaves();
        let mut out = DmnOutput {
            stress: Vec6::zeros(),
            coupling: 0.0,
            dissipation: 0.0,
            c_eps: Mat6::zeros(),
            c_theta: Vec6::zeros(),
            d_eps: Vec6::zeros(),
            d_theta: 0.0,
            iterations,
            residual: res,
            residual_history: history,
        };
        for col in 0..6 {
            let rhs = self.weighted_transpose_of(&responses, |g| -g.dstress_dstrain.column(col).into_owned());
            let x = self.solve_newton(&factor, &rhs);
            for l in 0..n_leaves {
                let Some(g) = &responses[l] else { continue };
                let ax = self.operator.apply_leaf(l, &x);
                let w = weights[l];
                let dstrain = g.dstress_dstrain * ax;
                for row in 0..6 {
                    out.c_eps[(row, col)] += w * (g.dstress_dstrain[(row, col)] + dstrain[row]);
                }
                out.d_eps[col] += w * (g.dcoupling_dstrain[col] + g.dcoupling_dstrain.dot(&ax));
            }
        }
        let rhs = self.weighted_transpose_of(&responses, |g| -g.dstress_dtheta);
        let y = self.solve_newton(&factor, &rhs);
        let mut leaf_states = state.leaf_states.clone();
        for l in 0..n_leaves {
            let Some(g) = &responses[l] else { continue };
            let w = weights[l];
            let ay = self.operator.apply_leaf(l, &y);
            out.stress += g.stress * w;
            out.coupling += w * g.coupling;
            out.dissipation += w * g.dissipation;
            out.c_theta += (g.dstress_dtheta + g.dstress_dstrain * ay) * w;
            out.d_theta += w * (g.dcoupling_dtheta + g.dcoupling_dstrain.dot(&ay));
            leaf_states[l] = g.state.clone();
        }
        let new_state = DmnState { leaf_states, jumps, leaf_strains: strains, macro_strain: *strain };
        Ok((out, new_state))
    }

    fn heat_capacity(&self) -> f64 {
        effective_heat_capacity(&self.topology, &self.phases)
    }
}
