//! Camera→projector extrinsics from per-view pose pairs.

use super::CalibrationError;
use crate::geometry::{RigidTransform, Vec3};
use nalgebra::{Quaternion, UnitQuaternion};

/// Maximum tolerated per-view rotational deviation from the mean.
pub const MAX_ROTATION_SPREAD_DEG: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StereoResult {
    /// Camera→projector rigid transform.
    pub cam_to_proj: RigidTransform,
    /// Per-view angular deviation from the averaged rotation, degrees.
    pub per_view_rotation_deg: Vec<f64>,
    /// Per-view translation deviation from the average, scene units.
    pub per_view_translation: Vec<f64>,
}

/// Fuses per-view camera and projector board poses into the rig extrinsic:
/// every view contributes `T_rel = T_proj ∘ T_cam⁻¹`; rotations are fused
/// by sign-aligned quaternion averaging and translations by the arithmetic
/// mean. Views spread more than 5° from the mean rotation are rejected as
/// inconsistent.
pub fn stereo_extrinsics(
    cam_poses: &[RigidTransform],
    proj_poses: &[RigidTransform],
) -> Result<StereoResult, CalibrationError> {
    if cam_poses.len() != proj_poses.len() || cam_poses.is_empty() {
        return Err(CalibrationError::BadView {
            view: 0,
            message: format!(
                "pose lists must be non-empty and equal length ({} vs {})",
                cam_poses.len(),
                proj_poses.len()
            ),
        });
    }

    let rels: Vec<RigidTransform> = cam_poses
        .iter()
        .zip(proj_poses)
        .map(|(cam, proj)| proj.compose(&cam.invert()))
        .collect();

    // Sign-aligned quaternion mean, renormalized.
    let first = UnitQuaternion::from_matrix(&rels[0].rotation);
    let mut acc = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    let mut t_acc = Vec3::zeros();
    for rel in &rels {
        let mut q = UnitQuaternion::from_matrix(&rel.rotation).into_inner();
        if q.dot(&first.into_inner()) < 0.0 {
            q = -q;
        }
        acc += q;
        t_acc += rel.translation;
    }
    let mean_rotation = UnitQuaternion::from_quaternion(acc).to_rotation_matrix();
    let cam_to_proj = RigidTransform {
        rotation: mean_rotation.into_inner(),
        translation: t_acc / rels.len() as f64,
    };

    let per_view_rotation_deg: Vec<f64> = rels
        .iter()
        .map(|rel| {
            let delta = RigidTransform {
                rotation: cam_to_proj.rotation.transpose() * rel.rotation,
                translation: Vec3::zeros(),
            };
            delta.rotation_angle().to_degrees()
        })
        .collect();
    let per_view_translation: Vec<f64> = rels
        .iter()
        .map(|rel| (rel.translation - cam_to_proj.translation).norm())
        .collect();

    let spread = per_view_rotation_deg
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    if spread > MAX_ROTATION_SPREAD_DEG {
        return Err(CalibrationError::InconsistentViews {
            spread_deg: spread,
            limit_deg: MAX_ROTATION_SPREAD_DEG,
        });
    }

    Ok(StereoResult {
        cam_to_proj,
        per_view_rotation_deg,
        per_view_translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Mat3;
    use approx::assert_relative_eq;
    use nalgebra::Unit;

    fn table_8_5_camera() -> RigidTransform {
        RigidTransform::new_unchecked(
            Mat3::new(
                0.96523178,
                -0.06801648,
                0.25239131,
                -0.05246011,
                0.89550287,
                0.4419531,
                -0.25607724,
                -0.43982765,
                0.86079968,
            ),
            Vec3::new(-257.85891969, -53.58173962, 1944.10591591),
        )
    }

    fn table_8_6_projector() -> RigidTransform {
        RigidTransform::new_unchecked(
            Mat3::new(
                0.94278236,
                -0.06015904,
                0.32793645,
                -0.03480907,
                0.96045107,
                0.27626448,
                -0.33158673,
                -0.27187244,
                0.90340225,
            ),
            Vec3::new(-120.20727633, 335.26497471, 4481.52560352),
        )
    }

    #[test]
    fn single_view_matches_matrix_oracle() {
        // Expected values computed beforehand with an explicit 4x4
        // homogeneous inverse and multiply of the same pose tables.
        let result = stereo_extrinsics(&[table_8_5_camera()], &[table_8_6_projector()]).unwrap();
        let expected_r = Mat3::new(
            0.996863607865,
            0.041601467814,
            0.067322098046,
            -0.029198571350,
            0.984008725559,
            -0.175710754231,
            -0.073555363522,
            0.173193947657,
            0.982137194206,
        );
        let expected_t = Vec3::new(8.190686605986, 722.061078750787, 2562.460000460658);
        assert_relative_eq!(result.cam_to_proj.rotation, expected_r, epsilon = 1e-6);
        assert_relative_eq!(result.cam_to_proj.translation, expected_t, epsilon = 1e-4);
    }

    #[test]
    fn identical_pose_lists_give_identity() {
        let poses: Vec<RigidTransform> = (0..3)
            .map(|i| {
                let mut t = RigidTransform::from_axis_angle(
                    Unit::new_normalize(Vec3::new(1.0, 0.4 * i as f64, -0.2)),
                    0.3 + 0.2 * i as f64,
                );
                t.translation = Vec3::new(-200.0, 50.0 * i as f64, 1900.0);
                t
            })
            .collect();
        let result = stereo_extrinsics(&poses, &poses).unwrap();
        assert_relative_eq!(
            result.cam_to_proj.rotation,
            Mat3::identity(),
            epsilon = 1e-12
        );
        assert!(result.cam_to_proj.translation.norm() < 1e-9);
    }

    #[test]
    fn exact_views_recover_known_baseline() {
        let baseline = RigidTransform::rotation_about_point(
            Unit::new_normalize(Vec3::new(0.1, 1.0, 0.0)),
            0.3,
            &crate::geometry::WorldPoint::new(100.0, 0.0, 0.0),
        );
        let mut cams = Vec::new();
        let mut projs = Vec::new();
        for i in 0..8 {
            let cam = RigidTransform::rotation_about_point(
                Unit::new_normalize(Vec3::new(1.0, 0.2 * i as f64, -0.5)),
                0.1 + 0.07 * i as f64,
                &crate::geometry::WorldPoint::new(0.0, 0.0, 800.0),
            );
            cams.push(cam);
            projs.push(baseline.compose(&cam));
        }
        let result = stereo_extrinsics(&cams, &projs).unwrap();
        assert_relative_eq!(result.cam_to_proj.rotation, baseline.rotation, epsilon = 1e-9);
        assert_relative_eq!(
            result.cam_to_proj.translation,
            baseline.translation,
            epsilon = 1e-9
        );
        assert!(result.per_view_rotation_deg.iter().all(|a| *a < 1e-9));
    }

    #[test]
    fn inconsistent_views_are_rejected() {
        let id = RigidTransform::identity();
        let off = RigidTransform::from_axis_angle(Unit::new_normalize(Vec3::y()), 0.2);
        // Relative transforms: identity and an 11.5° rotation.
        let err = stereo_extrinsics(&[id, id], &[id, off]).unwrap_err();
        assert!(matches!(err, CalibrationError::InconsistentViews { .. }));
    }
}
