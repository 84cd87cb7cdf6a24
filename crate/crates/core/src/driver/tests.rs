use std::cell::Cell;

use approx::assert_relative_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::dmn::Topology;
use crate::material::{Phase, PhasePair, Thermoelastic, ThermoelasticParams};
use crate::reference::ReferenceSolver;
use crate::solver::{DmnSolver, DmnState};
use crate::tensor::{isotropic_stiffness, Mat6, Vec6};

const THETA0: f64 = 293.15;

fn elastic_pair() -> PhasePair {
    let soft = Phase::Thermoelastic(
        Thermoelastic::new(ThermoelasticParams { young_gpa: 3.0, nu: 0.4, alpha0: 60e-6, ..ThermoelasticParams::glass() })
            .unwrap(),
    );
    PhasePair { first: Phase::glass(), second: soft }
}

fn single_phase() -> DmnSolver {
    let t = Topology::random(1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    DmnSolver::new(t, PhasePair { first: Phase::glass(), second: Phase::glass() })
}

fn network(depth: usize, phases: PhasePair, seed: u64) -> DmnSolver {
    DmnSolver::new(Topology::random(depth, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap(), phases)
}

fn strain_path(targets: impl Fn(f64) -> [f64; 6], steps: usize, duration: f64, thermal: ThermalMode) -> LoadProgram {
    LoadProgram {
        theta0: THETA0,
        thermal,
        control: [Control::Strain; 6],
        steps: (1..=steps)
            .map(|n| {
                let t = duration * n as f64 / steps as f64;
                LoadStep { time: t, target: targets(t) }
            })
            .collect(),
        cycle_period: None,
    }
}

fn hydrostatic(rate: f64, steps: usize) -> LoadProgram {
    strain_path(|t| [rate * t, rate * t, rate * t, 0.0, 0.0, 0.0], steps, 1.0, ThermalMode::Adiabatic)
}

#[test]
fn zero_strain_keeps_stress_and_temperature() {
    let point = network(2, elastic_pair(), 1);
    let traj = run_program(&point, &strain_path(|_| [0.0; 6], 5, 1.0, ThermalMode::Adiabatic)).unwrap();
    for r in &traj.records {
        assert!(r.stress.norm() < 1e-12);
        assert_eq!(r.theta, THETA0);
    }
}

#[test]
fn lateral_contraction_follows_poisson_ratio() {
    let program = LoadProgram::uniaxial(0, 0.01, 1e-3, 4, true, THETA0, ThermalMode::Isothermal);
    let traj = run_program(&single_phase(), &program).unwrap();
    let nu = ThermoelasticParams::glass().nu;
    for r in &traj.records[1..] {
        assert_relative_eq!(r.strain[1], -nu * r.strain[0], max_relative = 1e-9);
        assert_relative_eq!(r.strain[2], -nu * r.strain[0], max_relative = 1e-9);
        assert!(r.strain.rows(3, 3).norm() < 1e-12);
        assert!(r.stress.rows(1, 5).iter().all(|s| s.abs() <= STRESS_TOLERANCE));
        assert_relative_eq!(r.stress[0], 72e3 * r.strain[0], max_relative = 1e-9);
    }
}

#[test]
fn hydrostatic_extension_cools_and_compression_heats() {
    let point = network(2, elastic_pair(), 2);
    let cooling = run_program(&point, &hydrostatic(2e-3, 10)).unwrap();
    let heating = run_program(&point, &hydrostatic(-2e-3, 10)).unwrap();
    for w in cooling.records.windows(2) {
        assert!(w[1].theta < w[0].theta);
    }
    for w in heating.records.windows(2) {
        assert!(w[1].theta > w[0].theta);
    }
    assert!(cooling.energy_balance_error() < 1e-10);
    assert!(heating.energy_balance_error() < 1e-10);
}

#[test]
fn adiabatic_energy_balance_with_inelastic_phases() {
    let point = network(2, PhasePair::glass_pa66(), 3);
    let program = LoadProgram::uniaxial(0, 0.04, 5e-3, 40, true, THETA0, ThermalMode::Adiabatic);
    let traj = run_program(&point, &program).unwrap();
    assert!(traj.energy_balance_error() < 1e-10, "{:e}", traj.energy_balance_error());
    assert!(traj.last().dissipation > 0.0);
    let cooled = ThermalMode::Convection { film_coefficient: 50.0, area_per_volume: 2e3 };
    let program = LoadProgram { thermal: cooled, ..program };
    let convective = run_program(&point, &program).unwrap();
    // Exchange with the surroundings pulls the temperature back toward θ₀.
    let (open, closed) = (convective.last().delta_theta, traj.last().delta_theta);
    assert!(open.abs() < closed.abs() && open * closed > 0.0, "{open} vs {closed}");
}

#[test]
fn temperature_converges_at_first_order_in_the_step() {
    let point = network(2, elastic_pair(), 4);
    let finals: Vec<f64> = [10, 20, 40].iter().map(|&n| run_program(&point, &hydrostatic(5e-3, n)).unwrap().last().delta_theta).collect();
    let order = ((finals[0] - finals[1]) / (finals[1] - finals[2])).abs().log2();
    assert!(order >= 0.9, "observed order {order}");
}

#[test]
fn prescribed_stress_components_are_reproduced() {
    let point = network(2, PhasePair::glass_pa66(), 5);
    let program = LoadProgram::cyclic_stress(0, 40.0, 10.0, 2, 20, THETA0, ThermalMode::Adiabatic);
    let traj = run_program(&point, &program).unwrap();
    for (r, step) in traj.records[1..].iter().zip(&program.steps) {
        for i in 0..6 {
            assert!((r.stress[i] - step.target[i]).abs() <= STRESS_TOLERANCE * step.target[i].abs().max(1.0));
        }
    }
}

#[test]
fn prescribed_temperature_history_is_followed() {
    let point = network(2, elastic_pair(), 6);
    let thermal = ThermalMode::Prescribed { points: vec![(0.0, THETA0), (1.0, THETA0 + 20.0)] };
    let traj = run_program(&point, &strain_path(|_| [0.0; 6], 4, 1.0, thermal)).unwrap();
    for r in &traj.records {
        assert_relative_eq!(r.theta, THETA0 + 20.0 * r.time, max_relative = 1e-14);
    }
    // Heating at zero strain compresses the constrained material.
    assert!(traj.last().stress[0] < 0.0);
}

/// Isotropic elastic point that refuses steps longer than `max_dt`.
struct Fragile {
    stiffness: Mat6,
    max_dt: f64,
    calls: Cell<usize>,
}

impl MaterialPoint for Fragile {
    type State = ();

    fn initial_state(&self) {}

    fn evaluate(&self, _: &(), strain: &Vec6, _theta: f64, dt: f64) -> Result<(DmnOutput, ())> {
        self.calls.set(self.calls.get() + 1);
        if dt > self.max_dt {
            return Err(Error::NewtonNonConvergence { history: vec![1.0] });
        }
        let out = DmnOutput {
            stress: self.stiffness * strain,
            coupling: 0.0,
            dissipation: 0.0,
            c_eps: self.stiffness,
            c_theta: Vec6::zeros(),
            d_eps: Vec6::zeros(),
            d_theta: 0.0,
            iterations: 1,
            residual: 0.0,
            residual_history: vec![0.0],
        };
        Ok((out, ()))
    }

    fn heat_capacity(&self) -> f64 {
        1e6
    }
}

#[test]
fn failed_steps_are_bisected_and_reported_on_the_original_grid() {
    let point = Fragile { stiffness: isotropic_stiffness(2.0, 1.0).unwrap(), max_dt: 0.3, calls: Cell::new(0) };
    let program = LoadProgram::uniaxial(0, 0.01, 0.01, 1, true, THETA0, ThermalMode::Isothermal);
    let traj = run_program(&point, &program).unwrap();
    assert_eq!(traj.records.len(), 2);
    assert_eq!(traj.last().time, 1.0);
    // Four quarter steps, each with its own control iterations.
    assert!(traj.last().iterations >= 4);
    // K = 2, G = 1 gives ν = (3K − 2G)/(6K + 2G) = 2/7.
    assert_relative_eq!(traj.last().strain[1], -0.01 * 2.0 / 7.0, max_relative = 1e-9);

    let hopeless = Fragile { stiffness: isotropic_stiffness(2.0, 1.0).unwrap(), max_dt: 0.05, calls: Cell::new(0) };
    let err = run_program(&hopeless, &program).unwrap_err();
    assert!(matches!(err, Error::NewtonNonConvergence { .. }));
    assert_eq!(err.exit_code(), 2);
}

fn synthetic(values: &[f64], offset: f64) -> Trajectory {
    let records = values
        .iter()
        .enumerate()
        .map(|(n, v)| StepRecord {
            time: n as f64,
            strain: Vec6::zeros(),
            stress: Vec6::new(v + offset, 0.0, 0.0, 0.0, 0.0, 0.0),
            theta: THETA0,
            delta_theta: 0.0,
            coupling: 0.0,
            dissipation: 0.0,
            heat: 0.0,
            iterations: 1,
            inner_iterations: 1,
        })
        .collect();
    Trajectory { theta0: THETA0, heat_capacity: 2.0, cycle_period: None, records }
}

#[test]
fn error_metric_examples() {
    let reference = synthetic(&[0.0, 10.0, -40.0, 25.0], 0.0);
    let same = error_metrics(&reference, &reference, &[0]).unwrap();
    assert_eq!(same.stress, Some(Eta { mean: 0.0, max: 0.0 }));
    assert_eq!(same.delta_theta, None);
    assert_eq!(same.dissipation, None);

    let shifted = synthetic(&[0.0, 10.0, -40.0, 25.0], 2.0);
    let m = error_metrics(&shifted, &reference, &[0]).unwrap();
    assert_relative_eq!(m.stress.unwrap().max, 2.0 / 40.0, max_relative = 1e-15);
    assert_relative_eq!(m.stress.unwrap().mean, 2.0 / 40.0, max_relative = 1e-15);

    let shorter = synthetic(&[0.0, 1.0], 0.0);
    assert!(error_metrics(&shorter, &reference, &[0]).is_err());
    assert!(error_metrics(&reference, &reference, &[6]).is_err());
}

#[test]
fn cycle_metrics_of_a_sinusoid() {
    let (eps0, period) = (0.01, 0.1);
    let point = network(2, elastic_pair(), 7);
    let program = LoadProgram {
        cycle_period: Some(period),
        ..strain_path(
            |t| [eps0 * (2.0 * std::f64::consts::PI * t / period).sin(), 0.0, 0.0, 0.0, 0.0, 0.0],
            3 * 20,
            3.0 * period,
            ThermalMode::Isothermal,
        )
    };
    let traj = run_program(&point, &program).unwrap();
    let cycles = cyclic_metrics(&traj, period, Amplitude::Component(0)).unwrap();
    assert_eq!(cycles.len(), 3);
    for c in &cycles {
        assert!(c.strain_amplitude <= eps0 * (1.0 + 1e-12) && c.strain_amplitude >= 0.987 * eps0);
        assert_eq!(c.mean_delta_theta, 0.0);
        assert_eq!(c.dissipated, 0.0);
    }
    let principal = cyclic_metrics(&traj, period, Amplitude::Principal).unwrap();
    for (a, b) in principal.iter().zip(&cycles) {
        assert_relative_eq!(a.strain_amplitude, b.strain_amplitude, max_relative = 1e-12);
    }
    // A partial trailing cycle is dropped.
    assert_eq!(cyclic_metrics(&traj, 2.0 * period, Amplitude::Component(0)).unwrap().len(), 1);
}

#[test]
fn network_and_oracle_trajectories_agree() {
    let topology = Topology::random(3, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
    let dmn = DmnSolver::new(topology.clone(), PhasePair::glass_pa66());
    let oracle = ReferenceSolver::new(topology, PhasePair::glass_pa66());
    let program = LoadProgram::uniaxial(0, 0.02, 5e-2, 10, true, THETA0, ThermalMode::Adiabatic);
    let a = run_program(&dmn, &program).unwrap();
    let b = run_program(&oracle, &program).unwrap();
    let m = error_metrics(&a, &b, &[0]).unwrap();
    for eta in [m.stress, m.coupling, m.dissipation, m.delta_theta] {
        assert!(eta.unwrap().max < 1e-8, "{m:?}");
    }
    let _: &DmnState = &dmn.initial_state();
}

#[test]
fn pa66_heats_up_under_stress_cycling() {
    let point = network(2, PhasePair::glass_pa66(), 9);
    let program = LoadProgram::cyclic_stress(0, 20.0, 10.0, 10, 20, THETA0, ThermalMode::Adiabatic);
    let traj = run_program(&point, &program).unwrap();
    let cycles = cyclic_metrics(&traj, 0.1, Amplitude::Component(0)).unwrap();
    assert_eq!(cycles.len(), 10);
    for w in cycles.windows(2) {
        assert!(w[1].mean_delta_theta >= w[0].mean_delta_theta);
    }
    assert!(cycles[9].mean_delta_theta > 0.0);
}

#[test]
fn program_spec_expands() {
    let json = r#"{"thermal": {"mode": "convection", "film_coefficient": 10.0, "area_per_volume": 100.0},
                  "load": {"kind": "cyclic_stress", "component": 1, "amplitude": 30.0, "frequency": 10.0,
                           "cycles": 2, "steps_per_cycle": 8}}"#;
    let spec: ProgramSpec = serde_json::from_str(json).unwrap();
    let program = spec.expand().unwrap();
    assert_eq!(program.theta0, 293.15);
    assert_eq!(program.steps.len(), 16);
    assert_eq!(program.cycle_period, Some(0.1));
    assert_relative_eq!(program.steps[1].target[1], 30.0, max_relative = 1e-12);
    assert_relative_eq!(program.thermal.loss_coefficient(), 1e-3, max_relative = 1e-12);

    let bad: ProgramSpec =
        serde_json::from_str(r#"{"load": {"kind": "uniaxial", "component": 7, "strain": 0.01, "rate": 1e-3, "steps": 4}}"#).unwrap();
    assert!(bad.expand().is_err());
    let reversed = LoadProgram::reversal(0, 0.02, 1e-2, 8, THETA0, ThermalMode::Adiabatic);
    let peak = reversed.steps.iter().map(|s| s.target[0]).fold(f64::NEG_INFINITY, f64::max);
    assert_relative_eq!(peak, 0.02, max_relative = 1e-12);
    assert_relative_eq!(reversed.steps[7].target[0], 0.0, epsilon = 1e-15);
}
