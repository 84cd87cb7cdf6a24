//! Virtual experiments on a single homogenized material point.

mod metrics;
mod program;

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::solver::{DmnOutput, MaterialPoint};
use crate::tensor::Vec6;

pub use metrics::{
    cyclic_metrics, error_metrics, write_cycles_csv, write_metrics_csv, Amplitude, CycleRecord, ErrorMetrics, Eta,
};
pub use program::{Control, LoadKind, LoadProgram, LoadStep, ProgramSpec, ThermalMode};

/// Halvings of a failed step before giving up.
pub const MAX_BISECTIONS: usize = 4;
const MAX_CONTROL_ITERATIONS: usize = 30;

/// Relative tolerance on prescribed stress components.
pub const STRESS_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub strain: Vec6,
    pub stress: Vec6,
    pub theta: f64,
    /// Temperature change since the start, accumulated separately from `theta`.
    pub delta_theta: f64,
    pub coupling: f64,
    pub dissipation: f64,
    /// Coupling heat released during the step, `∫ρ̄ dt` [MPa].
    pub heat: f64,
    /// Control iterations, summed over sub-steps.
    pub iterations: usize,
    /// Inner network iterations, summed over all evaluations.
    pub inner_iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub theta0: f64,
    /// Effective heat capacity [MPa K⁻¹].
    pub heat_capacity: f64,
    pub cycle_period: Option<f64>,
    /// The first record is the unloaded state at `t = 0`.
    pub records: Vec<StepRecord>,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory has the initial record")
    }

    /// Relative mismatch between the released coupling heat and the stored heat
    /// `c̄·Δθ̄`. Meaningful for adiabatic programs.
    pub fn energy_balance_error(&self) -> f64 {
        let released: f64 = self.records.iter().map(|r| r.heat).sum();
        let stored = self.heat_capacity * self.last().delta_theta;
        let scale = self.records.iter().map(|r| r.heat.abs()).sum::<f64>().max(stored.abs());
        if scale == 0.0 {
            0.0
        } else {
            (released - stored).abs() / scale
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let comps = ["11", "22", "33", "12", "13", "23"];
        let eps: Vec<String> = comps.iter().map(|c| format!("eps{c}")).collect();
        let sig: Vec<String> = comps.iter().map(|c| format!("sig{c}")).collect();
        writeln!(
            out,
            "t,{},{},theta,delta_theta,rho,dissipation,heat,iterations",
            eps.join(","),
            sig.join(",")
        )?;
        for r in &self.records {
            let e: Vec<String> = r.strain.iter().map(|v| format!("{v:.12e}")).collect();
            let s: Vec<String> = r.stress.iter().map(|v| format!("{v:.12e}")).collect();
            writeln!(
                out,
                "{:.12e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                r.time,
                e.join(","),
                s.join(","),
                r.theta,
                r.delta_theta,
                r.coupling,
                r.dissipation,
                r.heat,
                r.iterations
            )?;
        }
        Ok(())
    }
}

/// Point reached after an accepted (sub-)step.
struct Cursor<S> {
    state: S,
    time: f64,
    strain: Vec6,
    delta_theta: f64,
    target: [f64; 6],
}

struct Advance {
    output: DmnOutput,
    heat: f64,
    iterations: usize,
    inner_iterations: usize,
}

struct Runner<'a, P: MaterialPoint> {
    point: &'a P,
    program: &'a LoadProgram,
    /// Heat capacity [MPa K⁻¹].
    capacity: f64,
}

impl<P: MaterialPoint> Runner<'_, P> {
    fn advance(&self, from: &Cursor<P::State>, time: f64, target: [f64; 6], depth: usize) -> Result<(Cursor<P::State>, Advance)> {
        match self.solve_step(from, time, target) {
            Ok(done) => Ok(done),
            Err(e) if depth < MAX_BISECTIONS && (e.is_convergence_failure() || matches!(e, Error::Singular(_))) => {
                log::debug!("bisecting step ending at t = {time}: {e}");
                let mid_time = 0.5 * (from.time + time);
                let mid_target: [f64; 6] = std::array::from_fn(|i| 0.5 * (from.target[i] + target[i]));
                let (mid, first) = self.advance(from, mid_time, mid_target, depth + 1)?;
                let (end, second) = self.advance(&mid, time, target, depth + 1)?;
                Ok((
                    end,
                    Advance {
                        output: second.output,
                        heat: first.heat + second.heat,
                        iterations: first.iterations + second.iterations,
                        inner_iterations: first.inner_iterations + second.inner_iterations,
                    },
                ))
            }
            Err(e) => Err(e),
        }
    }

    /// Monolithic Newton iteration on the stress-controlled strain components
    /// and, for balanced thermal modes, the temperature.
    fn solve_step(&self, from: &Cursor<P::State>, time: f64, target: [f64; 6]) -> Result<(Cursor<P::State>, Advance)> {
        let prog = self.program;
        let dt = time - from.time;
        let free: Vec<usize> = (0..6).filter(|&i| prog.control[i] == Control::Stress).collect();
        let balanced = prog.thermal.is_balanced();
        let loss = prog.thermal.loss_coefficient();
        let theta_prev = prog.theta0 + from.delta_theta;
        let mut strain = from.strain;
        for i in 0..6 {
            if prog.control[i] == Control::Strain {
                strain[i] = target[i];
            }
        }
        let mut theta = if balanced { theta_prev } else { prog.thermal.theta_at(time, prog.theta0) };
        let n = free.len() + usize::from(balanced);
        let mut inner = 0;
        let mut worst = f64::INFINITY;
        for iteration in 1..=MAX_CONTROL_ITERATIONS {
            let (out, state) = self.point.evaluate(&from.state, &strain, theta, dt)?;
            inner += out.iterations;
            let source = out.coupling - loss * (theta - prog.theta0);
            let mut r = DVector::zeros(n);
            worst = 0.0;
            for (a, &i) in free.iter().enumerate() {
                r[a] = out.stress[i] - target[i];
                worst = f64::max(worst, r[a].abs() / (STRESS_TOLERANCE * target[i].abs().max(1.0)));
            }
            if balanced {
                r[n - 1] = self.capacity * (theta - theta_prev) - dt * source;
                worst = f64::max(worst, r[n - 1].abs() / (1e-12 * self.capacity));
            }
            if worst <= 1.0 {
                let heat = dt * out.coupling;
                let delta_theta = if balanced { from.delta_theta + dt * source / self.capacity } else { theta - prog.theta0 };
                let cursor = Cursor { state, time, strain, delta_theta, target };
                return Ok((cursor, Advance { output: out, heat, iterations: iteration, inner_iterations: inner }));
            }
            let mut jac = DMatrix::zeros(n, n);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    jac[(a, b)] = out.c_eps[(i, j)];
                }
                if balanced {
                    jac[(a, n - 1)] = out.c_theta[i];
                }
            }
            if balanced {
                for (b, &j) in free.iter().enumerate() {
                    jac[(n - 1, b)] = -dt * out.d_eps[j];
                }
                jac[(n - 1, n - 1)] = self.capacity - dt * (out.d_theta - loss);
            }
            let delta = jac.lu().solve(&(-r)).ok_or(Error::Singular("control Jacobian"))?;
            for (a, &i) in free.iter().enumerate() {
                strain[i] += delta[a];
            }
            if balanced {
                theta += delta[n - 1];
                if !(theta > 0.0) {
                    return Err(Error::ControlNonConvergence { time, residual: worst });
                }
            }
        }
        Err(Error::ControlNonConvergence { time, residual: worst })
    }
}

/// Runs a load program on a material point.
pub fn run_program<P: MaterialPoint>(point: &P, program: &LoadProgram) -> Result<Trajectory> {
    program.validate()?;
    let runner = Runner { point, program, capacity: point.heat_capacity() * 1e-6 };
    let theta_start = if program.thermal.is_balanced() { program.theta0 } else { program.thermal.theta_at(0.0, program.theta0) };
    let mut cursor = Cursor {
        state: point.initial_state(),
        time: 0.0,
        strain: Vec6::zeros(),
        delta_theta: theta_start - program.theta0,
        target: [0.0; 6],
    };
    let mut records = Vec::with_capacity(program.steps.len() + 1);
    records.push(StepRecord {
        time: 0.0,
        strain: Vec6::zeros(),
        stress: Vec6::zeros(),
        theta: theta_start,
        delta_theta: cursor.delta_theta,
        coupling: 0.0,
        dissipation: 0.0,
        heat: 0.0,
        iterations: 0,
        inner_iterations: 0,
    });
    for step in &program.steps {
        let (next, adv) = runner.advance(&cursor, step.time, step.target, 0)?;
        cursor = next;
        records.push(StepRecord {
            time: step.time,
            strain: cursor.strain,
            stress: adv.output.stress,
            theta: program.theta0 + cursor.delta_theta,
            delta_theta: cursor.delta_theta,
            coupling: adv.output.coupling,
            dissipation: adv.output.dissipation,
            heat: adv.heat,
            iterations: adv.iterations,
            inner_iterations: adv.inner_iterations,
        });
    }
    Ok(Trajectory {
        theta0: program.theta0,
        heat_capacity: runner.capacity,
        cycle_period: program.cycle_period,
        records,
    })
}

#[cfg(test)]
mod tests;
