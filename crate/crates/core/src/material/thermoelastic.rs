use super::{Gsm, GsmResponse, MaterialState, StepInput, ThermoelasticParams};
use crate::error::Result;
use crate::tensor::{bulk_shear, identity, isotropic_stiffness, Mat6, Vec6};

/// Isotropic linear thermoelastic phase.
#[derive(Clone, Debug)]
pub struct Thermoelastic {
    params: ThermoelasticParams,
    stiffness: Mat6,
    bulk: f64,
}

impl Thermoelastic {
    pub fn new(params: ThermoelasticParams) -> Result<Self> {
        params.validate()?;
        let (k, g) = bulk_shear(params.young_gpa * 1e3, params.nu);
        Ok(Self { stiffness: isotropic_stiffness(k, g)?, bulk: k, params })
    }

    pub fn params(&self) -> &ThermoelasticParams {
        &self.params
    }

    pub fn stiffness(&self) -> Mat6 {
        self.stiffness
    }

    /// Stress per unit temperature increase at fixed strain, `−C[α]`.
    fn thermal_stress(&self) -> Vec6 {
        identity() * (-3.0 * self.bulk * self.params.alpha0)
    }
}

impl Gsm for Thermoelastic {
    fn initial_state(&self) -> MaterialState {
        MaterialState::empty()
    }

    fn update(&self, input: &StepInput, _state: &MaterialState) -> Result<GsmResponse> {
        input.validate()?;
        let stress = self.stress(input, _state)?;
        let ca = -self.thermal_stress();
        let rate = (input.strain - input.strain_prev) / input.dt;
        let coupling = -input.theta * rate.dot(&ca);
        Ok(GsmResponse {
            stress,
            dstress_dstrain: self.stiffness,
            dstress_dtheta: self.thermal_stress(),
            coupling,
            dcoupling_dstrain: ca * (-input.theta / input.dt),
            dcoupling_dtheta: -rate.dot(&ca),
            dissipation: 0.0,
            state: MaterialState::empty(),
        })
    }

    fn stress(&self, input: &StepInput, _state: &MaterialState) -> Result<Vec6> {
        input.validate()?;
        let dtheta = input.theta - self.params.theta0_k;
        Ok(self.stiffness * input.strain + self.thermal_stress() * dtheta)
    }

    fn heat_capacity(&self) -> f64 {
        self.params.c0
    }

    fn is_dissipative(&self) -> bool {
        false
    }
}
