use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which macroscopic quantity a Mandel component prescribes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    Strain,
    Stress,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThermalMode {
    /// No heat exchange; the temperature follows the point heat balance.
    Adiabatic,
    /// Temperature held at the initial value.
    Isothermal,
    /// Piecewise-linear temperature history given as `(t, θ)` points.
    Prescribed { points: Vec<(f64, f64)> },
    /// Adiabatic balance plus the lumped loss `h·(A/V)·(θ − θ₀)`.
    Convection {
        /// Film coefficient [W m⁻² K⁻¹].
        film_coefficient: f64,
        /// Surface-to-volume ratio [m⁻¹].
        area_per_volume: f64,
    },
}

impl ThermalMode {
    /// True when the temperature is an unknown of the step.
    pub fn is_balanced(&self) -> bool {
        matches!(self, ThermalMode::Adiabatic | ThermalMode::Convection { .. })
    }

    /// Heat loss coefficient in MPa s⁻¹ K⁻¹.
    pub fn loss_coefficient(&self) -> f64 {
        match self {
            ThermalMode::Convection { film_coefficient, area_per_volume } => film_coefficient * area_per_volume * 1e-6,
            _ => 0.0,
        }
    }

    /// Prescribed temperature at time `t`.
    pub fn theta_at(&self, t: f64, theta0: f64) -> f64 {
        match self {
            ThermalMode::Prescribed { points } => {
                let Some(first) = points.first() else { return theta0 };
                if t <= first.0 {
                    return first.1;
                }
                for w in points.windows(2) {
                    let ((t0, a), (t1, b)) = (w[0], w[1]);
                    if t <= t1 {
                        return a + (b - a) * (t - t0) / (t1 - t0);
                    }
                }
                points.last().map_or(theta0, |p| p.1)
            }
            _ => theta0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub time: f64,
    /// Mandel strain targets for strain-controlled components, stress targets
    /// [MPa] for stress-controlled ones.
    pub target: [f64; 6],
}

/// Time-discrete load program of a material point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadProgram {
    pub theta0: f64,
    pub thermal: ThermalMode,
    pub control: [Control; 6],
    pub steps: Vec<LoadStep>,
    #[serde(default)]
    pub cycle_period: Option<f64>,
}

impl LoadProgram {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.theta0 > 0.0) {
            return bad(format!("initial temperature {} must be positive", self.theta0));
        }
        if self.steps.is_empty() {
            return bad("load program has no steps".into());
        }
        let mut t = 0.0;
        for (n, s) in self.steps.iter().enumerate() {
            if !(s.time > t) {
                return bad(format!("step {n}: time {} does not increase", s.time));
            }
            if s.target.iter().any(|v| !v.is_finite()) {
                return bad(format!("step {n}: non-finite target"));
            }
            t = s.time;
        }
        match &self.thermal {
            ThermalMode::Prescribed { points } => {
                if points.is_empty() || points.windows(2).any(|w| !(w[1].0 > w[0].0)) || points.iter().any(|p| !(p.1 > 0.0)) {
                    return bad("prescribed temperature needs increasing times and positive values".into());
                }
            }
            ThermalMode::Convection { film_coefficient, area_per_volume } => {
                if !(*film_coefficient >= 0.0 && *area_per_volume >= 0.0) {
                    return bad("convection parameters must be nonnegative".into());
                }
            }
            _ => {}
        }
        if let Some(p) = self.cycle_period {
            if !(p > 0.0) {
                return bad(format!("cycle period {p} must be positive"));
            }
        }
        Ok(())
    }

    /// Monotonic strain ramp of one component to `strain` at `rate` [1/s] in
    /// equidistant steps. The other components are stress free or held at zero strain.
    pub fn uniaxial(component: usize, strain: f64, rate: f64, steps: usize, lateral_free: bool, theta0: f64, thermal: ThermalMode) -> Self {
        let duration = strain.abs() / rate;
        let mut control = [if lateral_free { Control::Stress } else { Control::Strain }; 6];
        control[component] = Control::Strain;
        let steps = (1..=steps)
            .map(|n| {
                let s = n as f64 / steps as f64;
                let mut target = [0.0; 6];
                target[component] = strain * s;
                LoadStep { time: duration * s, target }
            })
            .collect();
        Self { theta0, thermal, control, steps, cycle_period: None }
    }

    /// Strain path `0 → a → −a → 0` on one component at constant rate, other components stress free.
    pub fn reversal(component: usize, amplitude: f64, rate: f64, steps: usize, theta0: f64, thermal: ThermalMode) -> Self {
        let duration = 4.0 * amplitude.abs() / rate;
        let mut control = [Control::Stress; 6];
        control[component] = Control::Strain;
        let steps = (1..=steps)
            .map(|n| {
                let s = n as f64 / steps as f64;
                let shape = if s <= 0.25 { 4.0 * s } else if s <= 0.75 { 2.0 - 4.0 * s } else { 4.0 * s - 4.0 };
                let mut target = [0.0; 6];
                target[component] = amplitude * shape;
                LoadStep { time: duration * s, target }
            })
            .collect();
        Self { theta0, thermal, control, steps, cycle_period: None }
    }

    /// Sinusoidal stress `σ = σᵃ sin(2πt/T)` on one component, all other stresses zero.
    pub fn cyclic_stress(
        component: usize,
        amplitude: f64,
        frequency: f64,
        cycles: usize,
        steps_per_cycle: usize,
        theta0: f64,
        thermal: ThermalMode,
    ) -> Self {
        let period = 1.0 / frequency;
        let n = cycles * steps_per_cycle;
        let steps = (1..=n)
            .map(|k| {
                let t = k as f64 * period / steps_per_cycle as f64;
                let mut target = [0.0; 6];
                target[component] = amplitude * (2.0 * PI * t / period).sin();
                LoadStep { time: t, target }
            })
            .collect();
        Self { theta0, thermal, control: [Control::Stress; 6], steps, cycle_period: Some(period) }
    }
}

/// Compact description of a load program, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramSpec {
    #[serde(default = "default_theta0")]
    pub theta0: f64,
    #[serde(default = "default_thermal")]
    pub thermal: ThermalMode,
    pub load: LoadKind,
}

fn default_theta0() -> f64 {
    293.15
}

fn default_thermal() -> ThermalMode {
    ThermalMode::Adiabatic
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoadKind {
    Explicit {
        control: [Control; 6],
        steps: Vec<LoadStep>,
        #[serde(default)]
        cycle_period: Option<f64>,
    },
    Uniaxial {
        component: usize,
        strain: f64,
        rate: f64,
        steps: usize,
        #[serde(default = "yes")]
        lateral_free: bool,
    },
    Reversal {
        component: usize,
        amplitude: f64,
        rate: f64,
        steps: usize,
    },
    CyclicStress {
        component: usize,
        amplitude: f64,
        frequency: f64,
        cycles: usize,
        steps_per_cycle: usize,
    },
}

fn yes() -> bool {
    true
}

impl ProgramSpec {
    pub fn expand(&self) -> Result<LoadProgram> {
        let check = |c: usize| {
            if c > 5 {
                Err(Error::InvalidInput(format!("component {c} outside 0..=5")))
            } else {
                Ok(())
            }
        };
        let (theta0, thermal) = (self.theta0, self.thermal.clone());
        let program = match &self.load {
            LoadKind::Explicit { control, steps, cycle_period } => LoadProgram {
                theta0,
                thermal,
                control: *control,
                steps: steps.clone(),
                cycle_period: *cycle_period,
            },
            LoadKind::Uniaxial { component, strain, rate, steps, lateral_free } => {
                check(*component)?;
                LoadProgram::uniaxial(*component, *strain, *rate, *steps, *lateral_free, theta0, thermal)
            }
            LoadKind::Reversal { component, amplitude, rate, steps } => {
                check(*component)?;
                LoadProgram::reversal(*component, *amplitude, *rate, *steps, theta0, thermal)
            }
            LoadKind::CyclicStress { component, amplitude, frequency, cycles, steps_per_cycle } => {
                check(*component)?;
                LoadProgram::cyclic_stress(*component, *amplitude, *frequency, *cycles, *steps_per_cycle, theta0, thermal)
            }
        };
        program.validate()?;
        Ok(program)
    }
}
