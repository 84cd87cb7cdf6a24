//! Thermo-viscoelastic, viscoplastic polyamide matrix.
//!
//! Generalized Maxwell viscoelasticity with a WLF time shift, J2 viscoplasticity
//! with power-law hardening and thermal softening. One implicit Euler step is
//! condensed exactly: for a given plastic increment the viscous strains follow in
//! closed form per branch, so only a scalar equation remains. All derivatives
//! come from running the same routine on dual numbers.

use std::f64::consts::LN_10;

use super::{Gsm, GsmResponse, MaterialState, Pa66Params, StepInput};
use crate::dual::{Dual, Real};
use crate::error::{Error, Result};
use crate::tensor::{bulk_shear, isotropic_stiffness, Mat6, Vec6};

/// Floor for the accumulated plastic strain inside the hardening law.
const HARDENING_FLOOR: f64 = 1e-12;
const LOCAL_MAXIT: usize = 200;

/// Time–temperature shift factor `a_θ`.
pub fn wlf_shift(theta: f64, c1: f64, c2: f64, theta_ref: f64) -> Result<f64> {
    wlf(theta, c1, c2, theta_ref)
}

fn wlf<T: Real>(theta: T, c1: f64, c2: f64, theta_ref: f64) -> Result<T> {
    let dtheta = theta - theta_ref;
    let denom = dtheta + c2;
    if denom.value().abs() < 1e-12 {
        return Err(Error::InvalidInput(format!(
            "WLF shift is singular at θ = {}",
            theta.value()
        )));
    }
    Ok((dtheta * (-c1 * LN_10) / denom).exp())
}

/// Thermal softening factor `exp(−β (θ − θ_ref))`.
pub fn temperature_degradation(theta: f64, beta: f64, theta_ref: f64) -> f64 {
    (-beta * (theta - theta_ref)).exp()
}

#[derive(Clone, Debug)]
struct Branch {
    bulk: f64,
    shear: f64,
    tau_bulk: f64,
    tau_shear: f64,
}

#[derive(Clone, Debug)]
pub struct Pa66 {
    params: Pa66Params,
    bulk_inf: f64,
    shear_inf: f64,
    branches: Vec<Branch>,
}

struct Trial<T> {
    stress: [T; 6],
    coupling: T,
    dissipation: T,
    plastic_increment: T,
    viscoplastic_increment: [T; 6],
    viscous: Vec<Vec6>,
}

impl Pa66 {
    pub fn new(params: Pa66Params) -> Result<Self> {
        params.validate()?;
        let (bulk_inf, shear_inf) = bulk_shear(params.young_inf_gpa * 1e3, params.nu);
        let branches = params
            .branches
            .iter()
            .map(|b| {
                let (bulk, shear) = bulk_shear(b.young_mpa, params.nu);
                let tau = 10f64.powf(b.tau_log10);
                Branch {
                    bulk,
                    shear,
                    tau_bulk: tau * b.young_mpa / bulk,
                    tau_shear: tau * b.young_mpa / shear,
                }
            })
            .collect();
        Ok(Self { params, bulk_inf, shear_inf, branches })
    }

    pub fn params(&self) -> &Pa66Params {
        &self.params
    }

    pub fn long_term_stiffness(&self) -> Mat6 {
        isotropic_stiffness(self.bulk_inf, self.shear_inf).expect("validated moduli")
    }

    fn hardening<T: Real>(&self, softening: T, eps_p: T) -> T {
        let e = if eps_p.value() > HARDENING_FLOOR { eps_p } else { T::cst(HARDENING_FLOOR) };
        softening * self.params.hardening_modulus * e.powf(self.params.hardening_exponent)
    }

    fn hardening_slope(&self, softening: f64, eps_p: f64) -> f64 {
        if eps_p > HARDENING_FLOOR {
            let n = self.params.hardening_exponent;
            softening * self.params.hardening_modulus * n * eps_p.powf(n - 1.0)
        } else {
            0.0
        }
    }

    /// Root of the scaled overstress equation in the variable
    /// `y = (η Δ / (Δt σ_Y))^{1/m}`, bracketed on `[0, f(0)/σ_Y]`.
    #[allow(clippy::too_many_arguments)]
    fn solve_plastic(
        &self,
        q_trial: f64,
        shear_eff: f64,
        yield_stress: f64,
        rate_scale: f64,
        softening: f64,
        eps_p: f64,
        upper: f64,
    ) -> Result<(f64, f64)> {
        let m = self.params.rate_exponent;
        let g = |y: f64| {
            let d = rate_scale * y.powf(m);
            let e = eps_p + d;
            let f = q_trial - 3.0 * shear_eff * d - yield_stress - self.hardening(softening, e);
            let df = -3.0 * shear_eff - self.hardening_slope(softening, e);
            let dd = rate_scale * m * y.powf(m - 1.0);
            (f / yield_stress - y, df * dd / yield_stress - 1.0)
        };
        let (mut lo, mut hi) = (0.0, upper);
        let mut y = upper;
        let mut residual = f64::INFINITY;
        let scale = 1.0 + q_trial / yield_stress;
        for _ in 0..LOCAL_MAXIT {
            let (r, dr) = g(y);
            residual = r.abs();
            if residual <= 1e-14 * scale || hi - lo <= 4.0 * f64::EPSILON * upper {
                return Ok((y, dr));
            }
            if r > 0.0 {
                lo = y;
            } else {
                hi = y;
            }
            let newton = y - r / dr;
            y = if dr < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        }
        Err(Error::LocalNonConvergence { iterations: LOCAL_MAXIT, residual })
    }

    fn kernel<T: Real>(
        &self,
        strain: &[T; 6],
        theta: T,
        input: &StepInput,
        state: &MaterialState,
        keep_state: bool,
    ) -> Result<Trial<T>> {
        let p = &self.params;
        if state.viscous.len() != self.branches.len() {
            return Err(Error::InvalidInput(format!(
                "state has {} viscous strains, model has {} branches",
                state.viscous.len(),
                self.branches.len()
            )));
        }
        let dt = input.dt;
        let shift = wlf(theta, p.wlf_c1, p.wlf_c2, p.theta_ref_k)?;
        let soft_yield = ((theta - p.theta_ref_k) * (-p.beta1)).exp();
        let soft_visc = ((theta - p.theta_ref_k) * (-p.beta2)).exp();
        let yield_stress = soft_yield * p.yield_stress;
        let viscosity = soft_visc * p.viscosity;

        // elastic trial for the mechanical strain ε − ε_vp − α(θ − θ₀)
        let thermal = (theta - p.theta0_k) * p.alpha0;
        let mut x = [T::zero(); 6];
        for a in 0..6 {
            x[a] = strain[a] - state.viscoplastic[a];
            if a < 3 {
                x[a] -= thermal;
            }
        }
        let tr_x = x[0] + x[1] + x[2];
        let mut dev_x = x;
        for v in dev_x.iter_mut().take(3) {
            *v -= tr_x / 3.0;
        }

        let mut h_bulk = Vec::with_capacity(self.branches.len());
        let mut h_shear = Vec::with_capacity(self.branches.len());
        let mut shear_eff = T::cst(self.shear_inf);
        let mut s_trial = [T::zero(); 6];
        for (b, ev) in self.branches.iter().zip(&state.viscous) {
            let hk = T::cst(dt) / (shift * b.tau_bulk);
            let hg = T::cst(dt) / (shift * b.tau_shear);
            let fg = T::cst(b.shear) / (hg + 1.0);
            shear_eff += fg;
            let ev_mean = (ev[0] + ev[1] + ev[2]) / 3.0;
            for a in 0..6 {
                let ev_dev = if a < 3 { ev[a] - ev_mean } else { ev[a] };
                s_trial[a] -= fg * (2.0 * ev_dev);
            }
            h_bulk.push(hk);
            h_shear.push(hg);
        }
        for a in 0..6 {
            s_trial[a] += shear_eff * 2.0 * dev_x[a];
        }
        let mut s_norm_sq = T::zero();
        for s in &s_trial {
            s_norm_sq += *s * *s;
        }

        let eps_p = state.plastic_strain;
        let mut plastic = T::zero();
        let mut dvp = [T::zero(); 6];
        if s_norm_sq.value() > 0.0 {
            let s_norm = s_norm_sq.sqrt();
            let q_trial = s_norm * 1.5f64.sqrt();
            let over0 = q_trial - yield_stress - self.hardening(soft_yield, T::cst(eps_p));
            if over0.value() > 0.0 {
                let rate_scale = yield_stress * dt / viscosity;
                let (y0, dg) = self.solve_plastic(
                    q_trial.value(),
                    shear_eff.value(),
                    yield_stress.value(),
                    rate_scale.value(),
                    soft_yield.value(),
                    eps_p,
                    over0.value() / yield_stress.value(),
                )?;
                // one Newton correction on the full scalar type carries the
                // implicit derivatives of the root
                let m = p.rate_exponent;
                let d0 = rate_scale * y0.powf(m);
                let over = q_trial
                    - shear_eff * 3.0 * d0
                    - yield_stress
                    - self.hardening(soft_yield, d0 + eps_p);
                let y = T::cst(y0) - (over / yield_stress - y0) / dg;
                plastic = rate_scale * y.powf(m);
                let scale = plastic * 1.5f64.sqrt() / s_norm;
                for a in 0..6 {
                    dvp[a] = s_trial[a] * scale;
                    x[a] -= dvp[a];
                    dev_x[a] -= dvp[a];
                }
            }
        }

        let tr_rate = (strain[0] + strain[1] + strain[2]
            - (input.strain_prev[0] + input.strain_prev[1] + input.strain_prev[2]))
            / dt;
        let expansion = theta * p.alpha0 * 3.0;
        let mut stress = [T::zero(); 6];
        for a in 0..6 {
            stress[a] = dev_x[a] * (2.0 * self.shear_inf);
            if a < 3 {
                stress[a] += tr_x * self.bulk_inf;
            }
        }
        let mut coupling = -(expansion * self.bulk_inf) * tr_rate;
        let mut viscous_work = T::zero();
        let mut viscous = Vec::with_capacity(if keep_state { self.branches.len() } else { 0 });
        for ((b, ev), (hk, hg)) in self.branches.iter().zip(&state.viscous).zip(h_bulk.iter().zip(&h_shear)) {
            let ev_tr = ev[0] + ev[1] + ev[2];
            let new_tr = (*hk * tr_x + ev_tr) / (*hk + 1.0);
            let sph = (tr_x - new_tr) * b.bulk;
            viscous_work += sph * (new_tr - ev_tr);
            coupling -= expansion * b.bulk * (tr_rate - (new_tr - ev_tr) / dt);
            let mut new_v = Vec6::zeros();
            for a in 0..6 {
                let ev_dev = if a < 3 { ev[a] - ev_tr / 3.0 } else { ev[a] };
                let new_dev = (*hg * dev_x[a] + ev_dev) / (*hg + 1.0);
                let sd = (dev_x[a] - new_dev) * (2.0 * b.shear);
                viscous_work += sd * (new_dev - ev_dev);
                stress[a] += sd;
                if a < 3 {
                    stress[a] += sph;
                }
                if keep_state {
                    new_v[a] = new_dev.value() + if a < 3 { new_tr.value() / 3.0 } else { 0.0 };
                }
            }
            if keep_state {
                viscous.push(new_v);
            }
        }
        let dissipation = (yield_stress * plastic + viscous_work) / dt;
        let softening_heat = theta * p.beta1 * self.hardening(soft_yield, plastic + eps_p) * plastic / dt;
        coupling = coupling - softening_heat + dissipation;

        Ok(Trial {
            stress,
            coupling,
            dissipation,
            plastic_increment: plastic,
            viscoplastic_increment: dvp,
            viscous,
        })
    }
}

impl Gsm for Pa66 {
    fn initial_state(&self) -> MaterialState {
        MaterialState::with_branches(self.branches.len())
    }

    fn update(&self, input: &StepInput, state: &MaterialState) -> Result<GsmResponse> {
        input.validate()?;
        let strain: [Dual<7>; 6] = std::array::from_fn(|a| Dual::variable(input.strain[a], a));
        let theta = Dual::variable(input.theta, 6);
        let t = self.kernel(&strain, theta, input, state, true)?;
        let mut resp = GsmResponse {
            stress: Vec6::from_fn(|a, _| t.stress[a].v),
            dstress_dstrain: Mat6::from_fn(|a, b| t.stress[a].d[b]),
            dstress_dtheta: Vec6::from_fn(|a, _| t.stress[a].d[6]),
            coupling: t.coupling.v,
            dcoupling_dstrain: Vec6::from_fn(|a, _| t.coupling.d[a]),
            dcoupling_dtheta: t.coupling.d[6],
            dissipation: t.dissipation.v,
            state: MaterialState {
                plastic_strain: state.plastic_strain + t.plastic_increment.v,
                viscoplastic: state.viscoplastic + Vec6::from_fn(|a, _| t.viscoplastic_increment[a].v),
                viscous: t.viscous,
            },
        };
        // remove roundoff drift off the deviatoric subspace
        let drift = (resp.state.viscoplastic[0] + resp.state.viscoplastic[1] + resp.state.viscoplastic[2]) / 3.0;
        for a in 0..3 {
            resp.state.viscoplastic[a] -= drift;
        }
        Ok(resp)
    }

    fn stress(&self, input: &StepInput, state: &MaterialState) -> Result<Vec6> {
        input.validate()?;
        let strain: [f64; 6] = std::array::from_fn(|a| input.strain[a]);
        let t = self.kernel(&strain, input.theta, input, state, false)?;
        Ok(Vec6::from_fn(|a, _| t.stress[a]))
    }

    fn heat_capacity(&self) -> f64 {
        self.params.c0
    }

    fn is_dissipative(&self) -> bool {
        true
    }
}
