//! Classical bounds on effective stiffnesses of two-phase composites.

use crate::error::{Error, Result};
use crate::tensor::{eig_sym, identity, isotropic_projectors, Mat6};

/// Arithmetic (Voigt) and harmonic (Reuss) means of the phase stiffnesses.
pub fn voigt_reuss(c1: &Mat6, c2: &Mat6, f1: f64) -> Result<(Mat6, Mat6)> {
    let inv = |c: &Mat6| c.try_inverse().ok_or(Error::Singular("Reuss mean"));
    let voigt = c1 * f1 + c2 * (1.0 - f1);
    let reuss = inv(&(inv(c1)? * f1 + inv(c2)? * (1.0 - f1)))?;
    Ok((voigt, reuss))
}

/// Smallest eigenvalue of `Voigt − C` and of `C − Reuss`, relative to the
/// norm of the Voigt mean. Nonnegative when the bounds hold.
pub fn voigt_reuss_slack(effective: &Mat6, c1: &Mat6, c2: &Mat6, f1: f64) -> Result<f64> {
    let (voigt, reuss) = voigt_reuss(c1, c2, f1)?;
    let sym = |m: Mat6| (m + m.transpose()) * 0.5;
    let upper = eig_sym(&sym(voigt - effective))?[0];
    let lower = eig_sym(&sym(effective - reuss))?[0];
    Ok(upper.min(lower) / voigt.norm())
}

/// Bulk and shear modulus of the isotropic part of a stiffness.
pub fn isotropic_moduli(c: &Mat6) -> (f64, f64) {
    let one = identity();
    let (_, p2) = isotropic_projectors();
    ((one.transpose() * c * one)[0] / 9.0, (p2 * c).trace() / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HashinShtrikman {
    pub bulk: (f64, f64),
    pub shear: (f64, f64),
}

impl HashinShtrikman {
    /// Bounds for isotropic phases `(K, G)` with volume fraction `f1` of the first.
    pub fn new(first: (f64, f64), second: (f64, f64), f1: f64) -> Self {
        let f = [f1, 1.0 - f1];
        let k = [first.0, second.0];
        let g = [first.1, second.1];
        let bulk_at = |gr: f64| 1.0 / (f[0] / (k[0] + 4.0 * gr / 3.0) + f[1] / (k[1] + 4.0 * gr / 3.0)) - 4.0 * gr / 3.0;
        let zeta = |kr: f64, gr: f64| gr / 6.0 * (9.0 * kr + 8.0 * gr) / (kr + 2.0 * gr);
        let shear_at = |z: f64| 1.0 / (f[0] / (g[0] + z) + f[1] / (g[1] + z)) - z;
        let (g_min, g_max) = (g[0].min(g[1]), g[0].max(g[1]));
        let (k_min, k_max) = (k[0].min(k[1]), k[0].max(k[1]));
        Self {
            bulk: (bulk_at(g_min), bulk_at(g_max)),
            shear: (shear_at(zeta(k_min, g_min)), shear_at(zeta(k_max, g_max))),
        }
    }

    /// Smallest relative distance of `(K, G)` to the inside of the bounds.
    pub fn slack(&self, bulk: f64, shear: f64) -> f64 {
        let rel = |(lo, hi): (f64, f64), x: f64| ((x - lo) / hi).min((hi - x) / hi);
        rel(self.bulk, bulk).min(rel(self.shear, shear))
    }
}
