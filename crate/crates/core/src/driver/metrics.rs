use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{StepRecord, Trajectory};
use crate::error::{Error, Result};
use crate::tensor::to_matrix;

/// Strain amplitude measure of a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplitude {
    /// Half the range of one Mandel component.
    Component(usize),
    /// Half the range between the largest and the smallest principal strain.
    Principal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleRecord {
    /// 1-based cycle number.
    pub cycle: usize,
    pub strain_amplitude: f64,
    /// Time average of θ̄ − θ̄₀ over the cycle [K].
    pub mean_delta_theta: f64,
    /// Time integral of the dissipation over the cycle [MPa].
    pub dissipated: f64,
}

fn trapezoid(records: &[&StepRecord], f: impl Fn(&StepRecord) -> f64) -> f64 {
    records.windows(2).map(|w| 0.5 * (w[1].time - w[0].time) * (f(w[0]) + f(w[1]))).sum()
}

/// Per-cycle metrics of a trajectory whose step grid contains the cycle
/// boundaries. A trailing partial cycle is dropped.
pub fn cyclic_metrics(trajectory: &Trajectory, period: f64, amplitude: Amplitude) -> Result<Vec<CycleRecord>> {
    if !(period > 0.0) {
        return Err(Error::InvalidInput(format!("cycle period {period} must be positive")));
    }
    if let Amplitude::Component(c) = amplitude {
        if c > 5 {
            return Err(Error::InvalidInput(format!("component {c} outside 0..=5")));
        }
    }
    let slack = 1e-9 * period;
    let end = trajectory.last().time;
    let cycles = ((end + slack) / period).floor() as usize;
    if end - cycles as f64 * period > slack {
        log::warn!("dropping the partial cycle after t = {}", cycles as f64 * period);
    }
    let theta0 = trajectory.theta0;
    let mut out = Vec::with_capacity(cycles);
    for n in 1..=cycles {
        let (lo, hi) = ((n - 1) as f64 * period - slack, n as f64 * period + slack);
        let window: Vec<&StepRecord> = trajectory.records.iter().filter(|r| r.time >= lo && r.time <= hi).collect();
        if window.len() < 2 {
            return Err(Error::InvalidInput(format!("cycle {n} contains fewer than two records")));
        }
        let (mut top, mut bottom) = (f64::NEG_INFINITY, f64::INFINITY);
        for r in &window {
            let (high, low) = match amplitude {
                Amplitude::Component(c) => (r.strain[c], r.strain[c]),
                Amplitude::Principal => {
                    let e = to_matrix(&r.strain).symmetric_eigenvalues();
                    (e.max(), e.min())
                }
            };
            top = top.max(high);
            bottom = bottom.min(low);
        }
        out.push(CycleRecord {
            cycle: n,
            strain_amplitude: 0.5 * (top - bottom),
            mean_delta_theta: trapezoid(&window, |r| r.theta - theta0) / period,
            dissipated: trapezoid(&window, |r| r.dissipation),
        });
    }
    Ok(out)
}

/// Time-mean and time-maximum of a relative error history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eta {
    pub mean: f64,
    pub max: f64,
}

/// Errors of a trajectory against a reference. `None` marks a quantity whose
/// reference vanishes identically.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub stress: Option<Eta>,
    pub delta_theta: Option<Eta>,
    pub dissipation: Option<Eta>,
    pub coupling: Option<Eta>,
}

fn eta(model: &Trajectory, reference: &Trajectory, f: impl Fn(&StepRecord) -> f64) -> Option<Eta> {
    let scale = reference.records.iter().map(|r| f(r).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let errors: Vec<f64> = model.records.iter().zip(&reference.records).map(|(a, b)| (f(a) - f(b)).abs() / scale).collect();
    let span = reference.last().time - reference.records[0].time;
    let integral: f64 = reference
        .records
        .windows(2)
        .zip(errors.windows(2))
        .map(|(r, e)| 0.5 * (r[1].time - r[0].time) * (e[0] + e[1]))
        .sum();
    Some(Eta { mean: integral / span, max: errors.iter().copied().fold(0.0, f64::max) })
}

fn worst(a: Option<Eta>, b: Option<Eta>) -> Option<Eta> {
    match (a, b) {
        (Some(a), Some(b)) => Some(Eta { mean: a.mean.max(b.mean), max: a.max.max(b.max) }),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Relative errors normalized by the time maximum of the reference. The
/// stress error is the worst over `stress_components`.
pub fn error_metrics(model: &Trajectory, reference: &Trajectory, stress_components: &[usize]) -> Result<ErrorMetrics> {
    let same_grid = model.records.len() == reference.records.len()
        && model.records.iter().zip(&reference.records).all(|(a, b)| a.time == b.time);
    if !same_grid {
        return Err(Error::InvalidInput("trajectories have different time grids".into()));
    }
    if reference.records.len() < 2 {
        return Err(Error::InvalidInput("trajectories need at least one step".into()));
    }
    if let Some(c) = stress_components.iter().find(|&&c| c > 5) {
        return Err(Error::InvalidInput(format!("component {c} outside 0..=5")));
    }
    let stress = stress_components.iter().fold(None, |acc, &c| worst(acc, eta(model, reference, |r| r.stress[c])));
    Ok(ErrorMetrics {
        stress,
        delta_theta: eta(model, reference, |r| r.delta_theta),
        dissipation: eta(model, reference, |r| r.dissipation),
        coupling: eta(model, reference, |r| r.coupling),
    })
}

pub fn write_cycles_csv<W: Write>(mut out: W, cycles: &[CycleRecord]) -> Result<()> {
    writeln!(out, "cycle,strain_amplitude,mean_delta_theta,dissipated")?;
    for c in cycles {
        writeln!(out, "{},{:.12e},{:.12e},{:.12e}", c.cycle, c.strain_amplitude, c.mean_delta_theta, c.dissipated)?;
    }
    Ok(())
}

/// One row per labelled comparison; skipped quantities are left empty.
pub fn write_metrics_csv<W: Write>(mut out: W, rows: &[(String, ErrorMetrics)]) -> Result<()> {
    writeln!(
        out,
        "case,stress_mean,stress_max,delta_theta_mean,delta_theta_max,dissipation_mean,dissipation_max,coupling_mean,coupling_max"
    )?;
    let cell = |e: Option<Eta>| e.map_or(",".to_string(), |e| format!("{:.6e},{:.6e}", e.mean, e.max));
    for (label, m) in rows {
        writeln!(
            out,
            "{label},{},{},{},{}",
            cell(m.stress),
            cell(m.delta_theta),
            cell(m.dissipation),
            cell(m.coupling)
        )?;
    }
    Ok(())
}
