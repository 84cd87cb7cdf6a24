//! Linear-elastic FFT homogenization on periodic voxel grids.
//!
//! The strain fluctuation solves the Lippmann–Schwinger equation with an
//! isotropic reference medium. The discrete Green operator is the classical
//! trigonometric one. Conjugate gradients run in the inner product weighted by
//! the reference stiffness, in which the operator is self-adjoint.

mod grid;
mod transform;

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bounds::isotropic_moduli;
use crate::error::{Error, Result};
use crate::tensor::{isotropic_stiffness, sym_dyad, Mat3, Mat6, Vec3, Vec6};

pub use grid::{sidecar_path, GridSidecar, InclusionShape, VoxelGrid};
pub use transform::{frequency, Fft3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FftConfig {
    /// Tolerance on the relative equilibrium residual.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for FftConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iterations: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FftSolveReport {
    /// Green-operator applications per load case, the right-hand side included.
    pub iterations: [usize; 6],
    /// Final relative equilibrium residual per load case.
    pub residuals: [f64; 6],
}

/// Reference medium with the means of the phase bulk and shear moduli.
pub fn reference_medium(c0: &Mat6, c1: &Mat6) -> Result<(f64, f64)> {
    let (k0, g0) = isotropic_moduli(c0);
    let (k1, g1) = isotropic_moduli(c1);
    let (k, g) = (0.5 * (k0 + k1), 0.5 * (g0 + g1));
    isotropic_stiffness(k, g)?;
    Ok((k, g))
}

struct Problem<'a> {
    grid: &'a VoxelGrid,
    stiffness: [Mat6; 2],
    reference: Mat6,
    /// Inverse acoustic tensor of the reference medium is `(I − a n⊗n)/G`.
    shear: f64,
    acoustic_factor: f64,
    fft: Fft3,
}

impl Problem<'_> {
    fn stress(&self, strain: &[Vec6]) -> Vec<Vec6> {
        strain.iter().zip(self.grid.phases()).map(|(e, &p)| self.stiffness[p as usize] * e).collect()
    }

    /// Compatible zero-mean strain `Γ τ` for a polarization field `τ`.
    fn green(&self, tau: &[Vec6]) -> Vec<Vec6> {
        let n = tau.len();
        let mut spectra: Vec<Vec<Complex64>> = (0..6)
            .map(|c| {
                let mut s: Vec<Complex64> = tau.iter().map(|t| Complex64::new(t[c], 0.0)).collect();
                self.fft.forward(&mut s);
                s
            })
            .collect();
        let [n0, n1, n2] = self.grid.dims();
        let cell = self.grid.cell();
        for k in 0..n2 {
            let (fk, nk) = frequency(k, n2);
            for j in 0..n1 {
                let (fj, nj) = frequency(j, n1);
                for i in 0..n0 {
                    let (fi, ni) = frequency(i, n0);
                    let at = i + n0 * (j + n1 * k);
                    let xi = Vec3::new(fi / cell[0], fj / cell[1], fk / cell[2]);
                    // Modes paired with a Nyquist index that is not their own conjugate
                    // cannot keep the field real and are dropped.
                    let self_conjugate = [(fi, ni), (fj, nj), (fk, nk)].iter().all(|&(f, nyq)| nyq || f == 0.0);
                    let drop = (ni || nj || nk) && !self_conjugate;
                    if at == 0 || drop {
                        spectra.iter_mut().for_each(|s| s[at] = Complex64::default());
                        continue;
                    }
                    let dir = xi / xi.norm();
                    let inv_acoustic = (Mat3::identity() - dir * dir.transpose() * self.acoustic_factor) / self.shear;
                    let b = sym_dyad(&dir);
                    let gamma = b * inv_acoustic * b.transpose();
                    let t: [Complex64; 6] = std::array::from_fn(|c| spectra[c][at]);
                    for r in 0..6 {
                        spectra[r][at] = (0..6).map(|c| t[c] * gamma[(r, c)]).sum();
                    }
                }
            }
        }
        let mut out = vec![Vec6::zeros(); n];
        for (c, s) in spectra.iter_mut().enumerate() {
            self.fft.inverse(s);
            for (o, z) in out.iter_mut().zip(s.iter()) {
                o[c] = z.re;
            }
        }
        out
    }

    fn dot(&self, a: &[Vec6], b: &[Vec6]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x.dot(&(self.reference * y))).sum::<f64>() / a.len() as f64
    }

    fn mean(&self, field: &[Vec6]) -> Vec6 {
        field.iter().fold(Vec6::zeros(), |acc, v| acc + v) / field.len() as f64
    }

    /// Mean stress of the strain field `E + ε̃` solving the cell problem for the
    /// macroscopic strain `E`, with iteration count and residual.
    fn solve(&self, macro_strain: &Vec6, cfg: &FftConfig) -> Result<(Vec6, usize, f64)> {
        let n = self.grid.len();
        let ref_inv = self.reference.try_inverse().ok_or(Error::Singular("FFT reference medium"))?;
        let base_stress = self.stress(&vec![*macro_strain; n]);
        let mut mean_stress = self.mean(&base_stress);
        let mut x = vec![Vec6::zeros(); n];
        let mut r: Vec<Vec6> = self.green(&base_stress).iter().map(|v| -v).collect();
        let mut applications = 1;
        let relative = |r: &[Vec6], s: &Vec6| {
            let scale = s.dot(&(ref_inv * s)).sqrt();
            if scale == 0.0 {
                0.0
            } else {
                self.dot(r, r).sqrt() / scale
            }
        };
        let mut residual = relative(&r, &mean_stress);
        let mut p = r.clone();
        let mut rr = self.dot(&r, &r);
        while residual > cfg.tol {
            if applications > cfg.max_iterations {
                return Err(Error::CgStagnation { iterations: applications, residual });
            }
            let cp = self.stress(&p);
            let ap = self.green(&cp);
            applications += 1;
            let pap = self.dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::CgStagnation { iterations: applications, residual });
            }
            let alpha = rr / pap;
            for i in 0..n {
                x[i] += p[i] * alpha;
                r[i] -= ap[i] * alpha;
            }
            mean_stress += self.mean(&cp) * alpha;
            let rr_next = self.dot(&r, &r);
            let beta = rr_next / rr;
            rr = rr_next;
            for i in 0..n {
                p[i] = r[i] + p[i] * beta;
            }
            residual = relative(&r, &mean_stress);
        }
        Ok((mean_stress, applications, residual))
    }
}

/// Effective stiffness of a two-phase grid from six unit macroscopic strains.
/// `c0` and `c1` are the stiffnesses of phase ids 0 and 1.
pub fn homogenize_fft(grid: &VoxelGrid, c0: &Mat6, c1: &Mat6, cfg: &FftConfig) -> Result<(Mat6, FftSolveReport)> {
    let (k, g) = reference_medium(c0, c1)?;
    let lame = k - 2.0 * g / 3.0;
    let problem = Problem {
        grid,
        stiffness: [*c0, *c1],
        reference: isotropic_stiffness(k, g)?,
        shear: g,
        acoustic_factor: (lame + g) / (lame + 2.0 * g),
        fft: Fft3::new(grid.dims()),
    };
    let columns: Vec<(Vec6, usize, f64)> = (0..6)
        .into_par_iter()
        .map(|c| {
            let mut e = Vec6::zeros();
            e[c] = 1.0;
            problem.solve(&e, cfg)
        })
        .collect::<Result<_>>()?;
    let mut effective = Mat6::zeros();
    let mut report = FftSolveReport { iterations: [0; 6], residuals: [0.0; 6] };
    for (c, (col, it, res)) in columns.into_iter().enumerate() {
        effective.set_column(c, &col);
        report.iterations[c] = it;
        report.residuals[c] = res;
    }
    Ok((effective, report))
}

pub fn write_stiffness_csv<W: Write>(mut out: W, c: &Mat6) -> Result<()> {
    for i in 0..6 {
        let row: Vec<String> = (0..6).map(|j| format!("{:.12e}", c[(i, j)])).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
