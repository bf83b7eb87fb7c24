//! Closed-form intrinsics and extrinsics from plane homographies.

use super::CalibrationError;
use crate::geometry::{nearest_rotation, CameraModel, Mat3, RigidTransform, Vec3};
use nalgebra::{DMatrix, SVector};

/// The 6-vector v_ij built from columns i and j of a homography; rows
/// v₁₂ᵀb = 0 and (v₁₁ − v₂₂)ᵀb = 0 constrain the image of the absolute
/// conic B = K⁻ᵀK⁻¹.
fn v_ij(h: &Mat3, i: usize, j: usize) -> SVector<f64, 6> {
    let hi = h.column(i);
    let hj = h.column(j);
    SVector::<f64, 6>::from_row_slice(&[
        hi[0] * hj[0],
        hi[0] * hj[1] + hi[1] * hj[0],
        hi[1] * hj[1],
        hi[2] * hj[0] + hi[0] * hj[2],
        hi[2] * hj[1] + hi[1] * hj[2],
        hi[2] * hj[2],
    ])
}

/// Closed-form intrinsics from ≥ 3 view homographies (distortion zero).
/// `image_size` only fills the model's sensor dimensions.
pub fn zhang_intrinsics(
    homographies: &[Mat3],
    image_size: (u32, u32),
) -> Result<CameraModel, CalibrationError> {
    if homographies.len() < 3 {
        return Err(CalibrationError::DegenerateMotion(format!(
            "need at least 3 views, got {}",
            homographies.len()
        )));
    }

    let m = homographies.len();
    let mut vmtx = DMatrix::<f64>::zeros(2 * m, 6);
    for (k, h) in homographies.iter().enumerate() {
        let v11 = v_ij(h, 0, 0);
        let v22 = v_ij(h, 1, 1);
        let v12 = v_ij(h, 0, 1);
        vmtx.row_mut(2 * k).copy_from(&v12.transpose());
        vmtx.row_mut(2 * k + 1).copy_from(&(v11 - v22).transpose());
    }

    let svd = vmtx.svd(true, true);
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    // A one-dimensional null space needs rank 5; parallel boards (pure
    // translations) leave the system rank-deficient.
    if svd.singular_values[order[4]] <= 1e-10 * svd.singular_values[order[0]] {
        return Err(CalibrationError::DegenerateMotion(
            "constraint system is rank-deficient (are all boards parallel?)".into(),
        ));
    }
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let b = v_t.row(order[5]);
    let (b11, b12, b22, b13, b23, b33) = (b[0], b[1], b[2], b[3], b[4], b[5]);

    let denom = b11 * b22 - b12 * b12;
    if denom.abs() <= 1e-14 * (b11 * b11 + b22 * b22).max(1e-300) {
        return Err(CalibrationError::DegenerateMotion(
            "B11·B22 − B12² vanishes".into(),
        ));
    }
    let v0 = (b12 * b13 - b11 * b23) / denom;
    let lambda = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11;
    if lambda / b11 <= 0.0 || lambda * b11 / denom <= 0.0 {
        return Err(CalibrationError::DegenerateMotion(
            "negative focal-length squares; homographies are inconsistent".into(),
        ));
    }
    let alpha = (lambda / b11).sqrt();
    let beta = (lambda * b11 / denom).sqrt();
    let gamma = -b12 * alpha * alpha * beta / lambda;
    let u0 = gamma * v0 / beta - b13 * alpha * alpha / lambda;

    let mut model = CameraModel::new(alpha, beta, u0, v0, image_size.0, image_size.1)
        .map_err(|e| CalibrationError::DegenerateMotion(e.to_string()))?;
    model.skew = gamma;
    Ok(model)
}

/// Board pose from its homography given intrinsics: `r1 = λK⁻¹h1`,
/// `r2 = λK⁻¹h2`, `r3 = r1 × r2`, `t = λK⁻¹h3`, with λ's sign chosen so the
/// board sits in front of the camera (`t_z > 0`) and the rotation projected
/// to the nearest orthonormal matrix.
pub fn zhang_extrinsics(model: &CameraModel, h: &Mat3) -> RigidTransform {
    let k_inv = model
        .intrinsic_matrix()
        .try_inverse()
        .expect("intrinsic matrix is invertible");
    let r1 = k_inv * h.column(0);
    let r2 = k_inv * h.column(1);
    let t = k_inv * h.column(2);
    let mut lambda = 2.0 / (r1.norm() + r2.norm());
    if t[2] * lambda < 0.0 {
        lambda = -lambda;
    }
    let r1 = r1 * lambda;
    let r2 = r2 * lambda;
    let r3 = r1.cross(&r2);
    let approx = Mat3::from_columns(&[r1, r2, r3]);
    RigidTransform {
        rotation: nearest_rotation(&approx),
        translation: Vec3::from(t * lambda),
    }
}
