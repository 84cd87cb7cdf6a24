use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{deviator, eig_sym, from_matrix, isotropic_projectors, Mat3, Mat6, Vec6};

/// Ranges of the stiffness-pair distribution. Moduli in GPa.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub modulus_min: f64,
    pub modulus_max: f64,
    /// Upper bound of the rank-one softening amplitude, below one.
    pub softening_max: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { modulus_min: 0.1, modulus_max: 100.0, softening_max: 0.995 }
    }
}

/// Parameters of one sampled pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairParams {
    pub bulk1: f64,
    pub shear1: f64,
    pub bulk2: f64,
    pub shear2: f64,
    pub softening: f64,
    /// Unit deviatoric direction of the softening.
    pub direction: Vec6,
}

impl PairParams {
    pub fn draw<R: Rng + ?Sized>(cfg: &SamplingConfig, rng: &mut R) -> Self {
        let (lo, hi) = (cfg.modulus_min.ln(), cfg.modulus_max.ln());
        let mut log_uniform = || rng.gen_range(lo..=hi).exp();
        let (bulk1, shear1, bulk2, shear2) = (log_uniform(), log_uniform(), log_uniform(), log_uniform());
        let softening = rng.gen_range(0.0..=cfg.softening_max);
        let direction = loop {
            let g = Mat3::from_fn(|_, _| StandardNormal.sample(rng));
            let d = deviator(&from_matrix(&((g + g.transpose()) * 0.5)));
            let norm = d.norm();
            if norm > 1e-8 {
                break d / norm;
            }
        };
        Self { bulk1, shear1, bulk2, shear2, softening, direction }
    }

    /// Isotropic first phase and second phase softened along one deviatoric direction.
    pub fn stiffnesses(&self) -> (Mat6, Mat6) {
        let (p1, p2) = isotropic_projectors();
        let c1 = p1 * (3.0 * self.bulk1) + p2 * (2.0 * self.shear1);
        let dd = self.direction * self.direction.transpose();
        let c2 = p1 * (3.0 * self.bulk2) + (p2 - dd * self.softening) * (2.0 * self.shear2);
        (c1, c2)
    }
}

pub fn sample_pair<R: Rng + ?Sized>(cfg: &SamplingConfig, rng: &mut R) -> (Mat6, Mat6) {
    PairParams::draw(cfg, rng).stiffnesses()
}

/// Ratio of the extreme eigenvalues across the two phases.
pub fn material_contrast(c1: &Mat6, c2: &Mat6) -> Result<f64> {
    let (e1, e2) = (eig_sym(c1)?, eig_sym(c2)?);
    if e1[0] <= 0.0 || e2[0] <= 0.0 {
        return Err(Error::InvalidInput("contrast needs positive definite stiffnesses".into()));
    }
    Ok((e1[5] / e2[0]).max(e2[5] / e1[0]))
}

/// Counts of contrasts in `bins` logarithmically spaced bins between the
/// smallest and largest value.
pub fn contrast_histogram(contrasts: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if contrasts.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = contrasts.iter().copied().fold(f64::INFINITY, f64::min).log10();
    let hi = contrasts.iter().copied().fold(f64::NEG_INFINITY, f64::max).log10();
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0usize; bins];
    for c in contrasts {
        let i = (((c.log10() - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, n)| (10f64.powf(lo + i as f64 * width), 10f64.powf(lo + (i + 1) as f64 * width), n))
        .collect()
}

pub fn write_histogram_csv<W: Write>(mut out: W, histogram: &[(f64, f64, usize)]) -> Result<()> {
    writeln!(out, "contrast_lo,contrast_hi,count")?;
    for (lo, hi, n) in histogram {
        writeln!(out, "{lo:.6e},{hi:.6e},{n}")?;
    }
    Ok(())
}
