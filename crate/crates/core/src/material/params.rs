use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThermoelasticParams {
    #[serde(rename = "E_GPa")]
    pub young_gpa: f64,
    pub nu: f64,
    #[serde(rename = "c0_J_per_m3K")]
    pub c0: f64,
    #[serde(rename = "alpha0_per_K")]
    pub alpha0: f64,
    #[serde(rename = "theta0_K")]
    pub theta0_k: f64,
    /// Stored for completeness; conduction is not modelled.
    #[serde(rename = "kappa0_W_per_mK", default)]
    pub kappa0: f64,
}

impl ThermoelasticParams {
    /// E-glass fibers.
    pub fn glass() -> Self {
        Self { young_gpa: 72.0, nu: 0.26, c0: 2.1e6, alpha0: 9e-6, theta0_k: 293.15, kappa0: 0.93 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_gpa > 0.0) || !(self.nu > -1.0 && self.nu < 0.5) || !(self.c0 > 0.0) {
            return Err(Error::InvalidInput(format!("inadmissible thermoelastic parameters {self:?}")));
        }
        if !(self.theta0_k > 0.0) {
            return Err(Error::InvalidInput("theta0 must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViscousBranch {
    #[serde(rename = "E_MPa")]
    pub young_mpa: f64,
    /// Decadic logarithm of the relaxation time in seconds.
    #[serde(rename = "tau_log10_s")]
    pub tau_log10: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pa66Params {
    #[serde(rename = "E_inf_GPa")]
    pub young_inf_gpa: f64,
    pub nu: f64,
    pub branches: Vec<ViscousBranch>,
    #[serde(rename = "wlf_C1")]
    pub wlf_c1: f64,
    #[serde(rename = "wlf_C2_K")]
    pub wlf_c2: f64,
    #[serde(rename = "sigma_Y0_MPa")]
    pub yield_stress: f64,
    #[serde(rename = "k_MPa")]
    pub hardening_modulus: f64,
    #[serde(rename = "n")]
    pub hardening_exponent: f64,
    #[serde(rename = "eta0_MPa_s")]
    pub viscosity: f64,
    #[serde(rename = "m")]
    pub rate_exponent: f64,
    #[serde(rename = "beta1_per_K")]
    pub beta1: f64,
    #[serde(rename = "beta2_per_K")]
    pub beta2: f64,
    #[serde(rename = "theta_ref_K")]
    pub theta_ref_k: f64,
    #[serde(rename = "c0_J_per_m3K")]
    pub c0: f64,
    #[serde(rename = "alpha0_per_K")]
    pub alpha0: f64,
    #[serde(rename = "theta0_K")]
    pub theta0_k: f64,
    #[serde(rename = "kappa0_W_per_mK", default)]
    pub kappa0: f64,
}

impl Pa66Params {
    /// Polyamide 6.6 matrix with twelve Maxwell branches.
    pub fn table() -> Self {
        let moduli = [265.0, 262.0, 248.0, 231.0, 211.0, 190.0, 170.0, 92.0, 78.0, 65.0, 54.0, 48.0];
        let taus = [-4.22, -3.42, -2.63, -1.84, -1.05, -0.26, 0.53, 1.32, 2.12, 2.91, 3.70, 4.49];
        Self {
            young_inf_gpa: 1.5,
            nu: 0.42,
            branches: moduli
                .iter()
                .zip(taus)
                .map(|(&young_mpa, tau_log10)| ViscousBranch { young_mpa, tau_log10 })
                .collect(),
            wlf_c1: 26.21,
            wlf_c2: 446.31,
            yield_stress: 15.5,
            hardening_modulus: 103.0,
            hardening_exponent: 0.32,
            viscosity: 74.0,
            rate_exponent: 2.0,
            beta1: 0.011,
            beta2: 0.07,
            theta_ref_k: 298.15,
            c0: 1.9e6,
            alpha0: 70e-6,
            theta0_k: 293.15,
            kappa0: 0.27,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.young_inf_gpa,
            self.yield_stress,
            self.viscosity,
            self.c0,
            self.theta_ref_k,
            self.theta0_k,
            self.wlf_c2,
        ];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::InvalidInput(format!("PA66 moduli, viscosities and temperatures must be positive: {positive:?}")));
        }
        if !(self.nu > -1.0 && self.nu < 0.5) {
            return Err(Error::InvalidInput(format!("Poisson ratio {} out of range", self.nu)));
        }
        if !(self.rate_exponent >= 1.0) {
            return Err(Error::InvalidInput(format!("rate exponent m = {} must be ≥ 1", self.rate_exponent)));
        }
        if self.hardening_modulus < 0.0 || self.hardening_exponent < 0.0 || self.beta1 < 0.0 || self.beta2 < 0.0 {
            return Err(Error::InvalidInput("hardening and softening parameters must be nonnegative".into()));
        }
        if self.branches.iter().any(|b| !(b.young_mpa > 0.0) || !b.tau_log10.is_finite()) {
            return Err(Error::InvalidInput("Maxwell branches need positive moduli and finite times".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum PhaseParams {
    Thermoelastic(ThermoelasticParams),
    Pa66(Pa66Params),
}

/// Materials JSON: phase one (odd leaves) and phase two (even leaves).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialsFile {
    pub phase1: PhaseParams,
    pub phase2: PhaseParams,
}

impl Default for MaterialsFile {
    fn default() -> Self {
        Self {
            phase1: PhaseParams::Thermoelastic(ThermoelasticParams::glass()),
            phase2: PhaseParams::Pa66(Pa66Params::table()),
        }
    }
}

impl MaterialsFile {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }

    pub fn phases(&self) -> Result<super::PhasePair> {
        Ok(super::PhasePair {
            first: super::Phase::from_params(&self.phase1)?,
            second: super::Phase::from_params(&self.phase2)?,
        })
    }
}
