//! Symmetric second- and fourth-order tensors in orthonormal Mandel coordinates.
//!
//! Component ordering is (11, 22, 33, 12, 13, 23). Off-diagonal entries of a
//! symmetric tensor are stored multiplied by √2, so the Euclidean dot product of
//! two 6-vectors equals the double contraction of the tensors.

use nalgebra::{Matrix3, SMatrix, Vector3};

use crate::error::{Error, Result};

pub type Vec6 = nalgebra::Vector6<f64>;
pub type Mat6 = nalgebra::Matrix6<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
/// Maps a vector `a` to `sym(a ⊗ n)` in Mandel coordinates.
pub type Mat63 = SMatrix<f64, 6, 3>;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Index pairs of the Mandel components.
pub const INDEX_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

#[inline]
pub fn mandel_factor(a: usize) -> f64 {
    if a < 3 {
        1.0
    } else {
        SQRT2
    }
}

/// Mandel position of the Cartesian index pair (i, j).
#[inline]
pub fn mandel_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 0) => 0,
        (1, 1) => 1,
        (2, 2) => 2,
        (0, 1) => 3,
        (0, 2) => 4,
        _ => 5,
    }
}

pub fn from_matrix(m: &Mat3) -> Vec6 {
    let mut v = Vec6::zeros();
    for (a, &(i, j)) in INDEX_PAIRS.iter().enumerate() {
        v[a] = mandel_factor(a) * 0.5 * (m[(i, j)] + m[(j, i)]);
    }
    v
}

pub fn to_matrix(v: &Vec6) -> Mat3 {
    let mut m = Mat3::zeros();
    for (a, &(i, j)) in INDEX_PAIRS.iter().enumerate() {
        let x = v[a] / mandel_factor(a);
        m[(i, j)] = x;
        m[(j, i)] = x;
    }
    m
}

/// Second-order identity.
pub fn identity() -> Vec6 {
    Vec6::new(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)
}

pub fn trace(v: &Vec6) -> f64 {
    v[0] + v[1] + v[2]
}

pub fn deviator(v: &Vec6) -> Vec6 {
    v - identity() * (trace(v) / 3.0)
}

/// Builds the Mandel matrix of a fourth-order tensor with minor symmetries.
pub fn mandel_from_fn(t: impl Fn(usize, usize, usize, usize) -> f64) -> Mat6 {
    let mut m = Mat6::zeros();
    for (a, &(i, j)) in INDEX_PAIRS.iter().enumerate() {
        for (b, &(k, l)) in INDEX_PAIRS.iter().enumerate() {
            m[(a, b)] = mandel_factor(a) * mandel_factor(b) * t(i, j, k, l);
        }
    }
    m
}

/// Direction of lamination: a vector of unit Euclidean length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitVector3(Vec3);

impl UnitVector3 {
    /// Accepts `v` only if its norm is within 1e-8 of one.
    pub fn new(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnitVector(norm));
        }
        Ok(Self(v / norm))
    }

    pub fn normalize(v: Vec3) -> Result<Self> {
        let norm = v.norm();
        if !norm.is_finite() || norm < 1e-300 {
            return Err(Error::NonUnitVector(norm));
        }
        Ok(Self(v / norm))
    }

    pub fn axis(i: usize) -> Self {
        let mut v = Vec3::zeros();
        v[i] = 1.0;
        Self(v)
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    /// Sign representative with the first nonzero component positive.
    pub fn canonical(&self) -> Self {
        let first = self.0.iter().copied().find(|x| *x != 0.0).unwrap_or(1.0);
        if first < 0.0 {
            Self(-self.0)
        } else {
            *self
        }
    }
}

/// Spherical and deviatoric projectors.
pub fn isotropic_projectors() -> (Mat6, Mat6) {
    let one = identity();
    let p1 = one * one.transpose() / 3.0;
    (p1, Mat6::identity() - p1)
}

pub fn isotropic_stiffness(bulk: f64, shear: f64) -> Result<Mat6> {
    if !(bulk > 0.0 && shear > 0.0) {
        return Err(Error::InvalidInput(format!(
            "moduli must be positive (K = {bulk}, G = {shear})"
        )));
    }
    let (p1, p2) = isotropic_projectors();
    Ok(p1 * (3.0 * bulk) + p2 * (2.0 * shear))
}

/// Bulk and shear modulus from Young's modulus and Poisson's ratio.
pub fn bulk_shear(young: f64, poisson: f64) -> (f64, f64) {
    (
        young / (3.0 * (1.0 - 2.0 * poisson)),
        young / (2.0 * (1.0 + poisson)),
    )
}

/// Linear map `a ↦ sym(a ⊗ n)`.
pub fn sym_dyad(n: &Vec3) -> Mat63 {
    let h = 1.0 / SQRT2;
    Mat63::from_row_slice(&[
        n[0], 0.0, 0.0, //
        0.0, n[1], 0.0, //
        0.0, 0.0, n[2], //
        h * n[1], h * n[0], 0.0, //
        h * n[2], 0.0, h * n[0], //
        0.0, h * n[2], h * n[1],
    ])
}

/// Projector onto strains of the form `sym(a ⊗ n)`, assembled from its
/// Cartesian components.
pub fn lamination_projector(n: &UnitVector3) -> Mat6 {
    let n = n.as_vec();
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    mandel_from_fn(|m, k, o, p| {
        0.5 * (n[m] * d(k, o) * n[p]
            + n[k] * d(m, o) * n[p]
            + n[m] * d(k, p) * n[o]
            + n[k] * d(m, p) * n[o])
            - n[m] * n[k] * n[o] * n[p]
    })
}

/// Partial derivatives of the Cartesian projector formula with respect to the
/// three components of `n`, evaluated without renormalization.
pub fn lamination_projector_derivative(n: &Vec3) -> [Mat6; 3] {
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    std::array::from_fn(|q| {
        mandel_from_fn(|m, k, o, p| {
            0.5 * (d(m, q) * d(k, o) * n[p]
                + n[m] * d(k, o) * d(p, q)
                + d(k, q) * d(m, o) * n[p]
                + n[k] * d(m, o) * d(p, q)
                + d(m, q) * d(k, p) * n[o]
                + n[m] * d(k, p) * d(o, q)
                + d(k, q) * d(m, p) * n[o]
                + n[k] * d(m, p) * d(o, q))
                - d(m, q) * n[k] * n[o] * n[p]
                - n[m] * d(k, q) * n[o] * n[p]
                - n[m] * n[k] * d(o, q) * n[p]
                - n[m] * n[k] * n[o] * d(p, q)
        })
    })
}

/// Relative asymmetry ‖M − Mᵀ‖ / ‖M‖.
pub fn asymmetry(m: &Mat6) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        0.0
    } else {
        (m - m.transpose()).norm() / norm
    }
}

/// Spectral decomposition of a symmetric 6×6 matrix by cyclic Jacobi rotations.
///
/// Returns the eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn eig_sym_vectors(m: &Mat6) -> Result<(Vec6, Mat6)> {
    let asym = asymmetry(m);
    if asym > 1e-10 {
        return Err(Error::Asymmetric(asym));
    }
    let mut a = (m + m.transpose()) * 0.5;
    let mut q = Mat6::identity();
    let scale = a.norm();
    if scale == 0.0 {
        return Ok((Vec6::zeros(), q));
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..6 {
            for j in (i + 1)..6 {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..6 {
            for r in (p + 1)..6 {
                let apr = a[(p, r)];
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..6 {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..6 {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let mut values = Vec6::zeros();
    let mut vectors = Mat6::zeros();
    for (dst, &src) in order.iter().enumerate() {
        values[dst] = a[(src, src)];
        vectors.set_column(dst, &q.column(src));
    }
    Ok((values, vectors))
}

/// Eigenvalues of a symmetric 6×6 matrix in ascending order.
pub fn eig_sym(m: &Mat6) -> Result<Vec6> {
    eig_sym_vectors(m).map(|(values, _)| values)
}

/// Rotation of a Mandel stiffness by the 3×3 rotation `r`.
pub fn rotation_operator(r: &Mat3) -> Mat6 {
    // Q_ab such that from_matrix(R X Rᵀ) = Q from_matrix(X)
    let mut q = Mat6::zeros();
    for b in 0..6 {
        let mut e = Vec6::zeros();
        e[b] = 1.0;
        let x = to_matrix(&e);
        q.set_column(b, &from_matrix(&(r * x * r.transpose())));
    }
    q
}
