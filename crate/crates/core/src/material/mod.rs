//! Phase materials behind a single incremental interface.
//!
//! Units: stress in MPa, time in s, temperature in K, heat capacities in
//! J m⁻³ K⁻¹. Coupling terms and dissipation are power densities in
//! MPa/s = MW/m³.

mod params;
mod pa66;
mod thermoelastic;

pub use params::{MaterialsFile, Pa66Params, PhaseParams, ThermoelasticParams, ViscousBranch};
pub use pa66::{temperature_degradation, wlf_shift, Pa66};
pub use thermoelastic::Thermoelastic;

use crate::error::{Error, Result};
use crate::tensor::{Mat6, Vec6};

/// Internal variables of one material point. Empty for elastic phases.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialState {
    /// Accumulated plastic strain.
    pub plastic_strain: f64,
    /// Viscoplastic strain (deviatoric).
    pub viscoplastic: Vec6,
    /// Viscous strains of the Maxwell branches.
    pub viscous: Vec<Vec6>,
}

impl MaterialState {
    pub fn empty() -> Self {
        Self { plastic_strain: 0.0, viscoplastic: Vec6::zeros(), viscous: Vec::new() }
    }

    pub fn with_branches(n: usize) -> Self {
        Self { plastic_strain: 0.0, viscoplastic: Vec6::zeros(), viscous: vec![Vec6::zeros(); n] }
    }
}

/// One implicit time step at a material point.
#[derive(Clone, Copy, Debug)]
pub struct StepInput {
    pub strain: Vec6,
    pub strain_prev: Vec6,
    pub theta: f64,
    pub dt: f64,
}

impl StepInput {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0) {
            return Err(Error::InvalidInput(format!("temperature must be positive, got {}", self.theta)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct GsmResponse {
    pub stress: Vec6,
    pub dstress_dstrain: Mat6,
    pub dstress_dtheta: Vec6,
    /// Thermomechanical coupling term.
    pub coupling: f64,
    pub dcoupling_dstrain: Vec6,
    pub dcoupling_dtheta: f64,
    pub dissipation: f64,
    pub state: MaterialState,
}

/// Incremental generalized standard material.
pub trait Gsm {
    fn initial_state(&self) -> MaterialState;

    /// Full update with stress, coupling term, dissipation and all tangents.
    fn update(&self, input: &StepInput, state: &MaterialState) -> Result<GsmResponse>;

    /// Stress only, for residual evaluations.
    fn stress(&self, input: &StepInput, state: &MaterialState) -> Result<Vec6>;

    /// Heat capacity at constant strain [J m⁻³ K⁻¹].
    fn heat_capacity(&self) -> f64;

    fn is_dissipative(&self) -> bool;
}

#[derive(Clone, Debug)]
pub enum Phase {
    Thermoelastic(Thermoelastic),
    Pa66(Pa66),
}

impl Phase {
    pub fn from_params(p: &PhaseParams) -> Result<Self> {
        Ok(match p {
            PhaseParams::Thermoelastic(t) => Phase::Thermoelastic(Thermoelastic::new(t.clone())?),
            PhaseParams::Pa66(t) => Phase::Pa66(Pa66::new(t.clone())?),
        })
    }

    pub fn glass() -> Self {
        Phase::Thermoelastic(Thermoelastic::new(ThermoelasticParams::glass()).expect("valid table"))
    }

    pub fn pa66() -> Self {
        Phase::Pa66(Pa66::new(Pa66Params::table()).expect("valid table"))
    }

    /// Stiffness governing infinitely slow, purely elastic loading [MPa].
    pub fn long_term_stiffness(&self) -> Mat6 {
        match self {
            Phase::Thermoelastic(t) => t.stiffness(),
            Phase::Pa66(p) => p.long_term_stiffness(),
        }
    }

    /// Thermal expansion reference temperature.
    pub fn theta0(&self) -> f64 {
        match self {
            Phase::Thermoelastic(t) => t.params().theta0_k,
            Phase::Pa66(p) => p.params().theta0_k,
        }
    }
}

impl Gsm for Phase {
    fn initial_state(&self) -> MaterialState {
        match self {
            Phase::Thermoelastic(m) => m.initial_state(),
            Phase::Pa66(m) => m.initial_state(),
        }
    }
    fn update(&self, input: &StepInput, state: &MaterialState) -> Result<GsmResponse> {
        match self {
            Phase::Thermoelastic(m) => m.update(input, state),
            Phase::Pa66(m) => m.update(input, state),
        }
    }
    fn stress(&self, input: &StepInput, state: &MaterialState) -> Result<Vec6> {
        match self {
            Phase::Thermoelastic(m) => m.stress(input, state),
            Phase::Pa66(m) => m.stress(input, state),
        }
    }
    fn heat_capacity(&self) -> f64 {
        match self {
            Phase::Thermoelastic(m) => m.heat_capacity(),
            Phase::Pa66(m) => m.heat_capacity(),
        }
    }
    fn is_dissipative(&self) -> bool {
        matches!(self, Phase::Pa66(_))
    }
}

/// The two phases of a composite. Phase one sits on odd leaves (1-based).
#[derive(Clone, Debug)]
pub struct PhasePair {
    pub first: Phase,
    pub second: Phase,
}

impl PhasePair {
    pub fn glass_pa66() -> Self {
        Self { first: Phase::glass(), second: Phase::pa66() }
    }

    pub fn get(&self, phase: usize) -> &Phase {
        if phase == 0 {
            &self.first
        } else {
            &self.second
        }
    }
}
