//! Modified Rodrigues Parameter attitude algebra.
//!
//! Every direction cosine matrix here maps coordinates of the reference frame
//! into coordinates of the frame the MRP describes, e.g. `mrp_to_dcm(sigma_bn)`
//! is `[BN]`.

use nalgebra::{Matrix3, Vector3, Vector4};
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttitudeError {
    #[error("matrix is not a proper rotation (orthogonality residual {residual:e}, det {det})")]
    NotARotation { residual: f64, det: f64 },
}

/// Attitude expressed as a Modified Rodrigues Parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mrp<T: Real>(pub Vector3<T>);

impl<T: Real> Mrp<T> {
    pub fn new(s1: T, s2: T, s3: T) -> Self {
        Mrp(Vector3::new(s1, s2, s3))
    }

    pub fn zero() -> Self {
        Mrp(Vector3::zeros())
    }

    pub fn from_vector(v: Vector3<T>) -> Self {
        Mrp(v)
    }

    pub fn vector(&self) -> &Vector3<T> {
        &self.0
    }

    pub fn norm(&self) -> T {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> T {
        self.0.norm_squared()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite_value())
    }

    /// The other MRP describing the same rotation.
    pub fn shadow(&self) -> Self {
        Mrp(-self.0 / self.0.norm_squared())
    }

    pub fn to_dcm(&self) -> Matrix3<T> {
        mrp_to_dcm(self)
    }
}

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew<T: Real>(a: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -a.z, a.y, a.z, z, -a.x, -a.y, a.x, z)
}

/// `B(σ) = (1 - σᵀσ) I + 2 σ× + 2 σσᵀ`.
pub fn b_matrix<T: Real>(sigma: &Mrp<T>) -> Matrix3<T> {
    let s = sigma.vector();
    let two = T::lit(2.0);
    Matrix3::identity() * (T::one() - s.norm_squared()) + skew(s) * two + s * s.transpose() * two
}

/// Analytic inverse of `B`, using `B Bᵀ = (1 + σᵀσ)² I`.
pub fn b_matrix_inverse<T: Real>(sigma: &Mrp<T>) -> Matrix3<T> {
    let d = T::one() + sigma.norm_squared();
    b_matrix(sigma).transpose() / (d * d)
}

/// Time derivative of `B(σ)` along `σ̇`.
pub fn b_matrix_dot<T: Real>(sigma: &Mrp<T>, sigma_dot: &Vector3<T>) -> Matrix3<T> {
    let s = sigma.vector();
    let two = T::lit(2.0);
    Matrix3::identity() * (-two * s.dot(sigma_dot))
        + skew(sigma_dot) * two
        + (sigma_dot * s.transpose() + s * sigma_dot.transpose()) * two
}

/// `σ̇ = ¼ B(σ) ω`.
pub fn mrp_kinematics<T: Real>(sigma: &Mrp<T>, omega: &Vector3<T>) -> Vector3<T> {
    b_matrix(sigma) * omega * T::lit(0.25)
}

/// Rotation matrix from the desired frame to the body frame, written in terms
/// of the cross-product matrix of the error MRP.
pub fn r_tilde<T: Real>(sigma_e: &Mrp<T>) -> Matrix3<T> {
    let s2 = sigma_e.norm_squared();
    let sx = skew(sigma_e.vector());
    let d = T::one() + s2;
    Matrix3::identity() + (sx * sx * T::lit(8.0) - sx * (T::lit(4.0) * (T::one() - s2))) / (d * d)
}

/// Direction cosine matrix of an MRP, built through the Euler parameters.
pub fn mrp_to_dcm<T: Real>(sigma: &Mrp<T>) -> Matrix3<T> {
    let q = mrp_to_quaternion(sigma);
    let q0 = q[0];
    let qv = Vector3::new(q[1], q[2], q[3]);
    let two = T::lit(2.0);
    Matrix3::identity() * (q0 * q0 - qv.norm_squared()) + qv * qv.transpose() * two
        - skew(&qv) * (two * q0)
}

/// Euler parameters `[q0, q1, q2, q3]` of an MRP.
fn mrp_to_quaternion<T: Real>(sigma: &Mrp<T>) -> Vector4<T> {
    let s2 = sigma.norm_squared();
    let d = T::one() + s2;
    let v = sigma.vector() * (T::lit(2.0) / d);
    Vector4::new((T::one() - s2) / d, v.x, v.y, v.z)
}

/// Sheppard's method; the returned quaternion has `q0 >= 0`.
fn dcm_to_quaternion<T: Real>(c: &Matrix3<T>) -> Vector4<T> {
    let one = T::one();
    let two = T::lit(2.0);
    let quarter = T::lit(0.25);
    let tr = c.trace();
    let sq = [
        one + tr,
        one + two * c[(0, 0)] - tr,
        one + two * c[(1, 1)] - tr,
        one + two * c[(2, 2)] - tr,
    ];
    let mut best = 0;
    for i in 1..4 {
        if sq[i] > sq[best] {
            best = i;
        }
    }
    let qb = (sq[best] * quarter).max(T::zero()).sqrt();
    let f = T::lit(4.0) * qb;
    let mut q = match best {
        0 => Vector4::new(
            qb,
            (c[(1, 2)] - c[(2, 1)]) / f,
            (c[(2, 0)] - c[(0, 2)]) / f,
            (c[(0, 1)] - c[(1, 0)]) / f,
        ),
        1 => Vector4::new(
            (c[(1, 2)] - c[(2, 1)]) / f,
            qb,
            (c[(0, 1)] + c[(1, 0)]) / f,
            (c[(2, 0)] + c[(0, 2)]) / f,
        ),
        2 => Vector4::new(
            (c[(2, 0)] - c[(0, 2)]) / f,
            (c[(0, 1)] + c[(1, 0)]) / f,
            qb,
            (c[(1, 2)] + c[(2, 1)]) / f,
        ),
        _ => Vector4::new(
            (c[(0, 1)] - c[(1, 0)]) / f,
            (c[(2, 0)] + c[(0, 2)]) / f,
            (c[(1, 2)] + c[(2, 1)]) / f,
            qb,
        ),
    };
    if q[0] < T::zero() {
        q = -q;
    }
    q
}

fn quaternion_to_short_mrp<T: Real>(q: &Vector4<T>) -> Mrp<T> {
    let d = T::one() + q[0];
    Mrp::new(q[1] / d, q[2] / d, q[3] / d)
}

/// Orthogonality tolerance used by [`dcm_to_mrp`]: 1e-9 in `f64`, scaled
/// with machine precision for coarser scalars.
fn rotation_tolerance<T: Real>() -> T {
    (T::eps() * T::lit(1.0e4)).max(T::lit(1.0e-9))
}

/// MRP of a proper rotation matrix, always in the short set (`‖σ‖ <= 1`).
pub fn dcm_to_mrp<T: Real>(dcm: &Matrix3<T>) -> Result<Mrp<T>, AttitudeError> {
    let residual = (dcm.transpose() * dcm - Matrix3::identity()).abs().max();
    let det = dcm.determinant();
    let tol = rotation_tolerance::<T>();
    if !(residual <= tol) || !((det - T::one()).abs() <= tol) {
        return Err(AttitudeError::NotARotation {
            residual: residual.to_f64(),
            det: det.to_f64(),
        });
    }
    Ok(quaternion_to_short_mrp(&dcm_to_quaternion(dcm)))
}

/// Error attitude of the body relative to the desired frame:
/// `dcm(σ_e) = dcm(σ) dcm(σ_d)ᵀ`, returned in the short set.
pub fn mrp_error<T: Real>(sigma: &Mrp<T>, sigma_d: &Mrp<T>) -> Mrp<T> {
    let c = mrp_to_dcm(sigma) * mrp_to_dcm(sigma_d).transpose();
    quaternion_to_short_mrp(&dcm_to_quaternion(&c))
}

/// Switches to the shadow set whenever `‖σ‖ > 1`.
pub fn shadow_if_needed<T: Real>(sigma: &Mrp<T>) -> Mrp<T> {
    if sigma.norm_squared() > T::one() {
        sigma.shadow()
    } else {
        *sigma
    }
}
