//! Camera and projector calibration.
//!
//! The camera is calibrated Zhang-style from planar checkerboard views:
//! per-view homographies, closed-form intrinsics from the absolute-conic
//! constraints, per-view extrinsics, then damped least-squares refinement
//! (optionally with lens distortion). The projector is calibrated as a
//! reverse camera: board corners are transferred from camera to projector
//! coordinates through local homographies fitted over the decoded
//! correspondence map, then the identical Zhang path runs on the
//! transferred corners. Per-view camera/projector pose pairs are fused into
//! the stereo extrinsic by sign-aligned quaternion averaging.

mod homography;
mod refine;
mod stereo;
mod transfer;
mod zhang;

pub use homography::estimate_homography;
pub use refine::{refine_calibration, reprojection_error, ReprojectionReport};
pub use stereo::{stereo_extrinsics, StereoResult};
pub use transfer::{transfer_corners_local_homography, TransferredCorners};
pub use zhang::{zhang_extrinsics, zhang_intrinsics};

use crate::codec::CorrespondenceMap;
use crate::geometry::{CameraModel, PixelPoint, RigidTransform};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("degenerate motion: {0}")]
    DegenerateMotion(String),
    #[error("view has no correspondence map for corner transfer")]
    MissingCorrespondence,
    #[error("views are inconsistent: rotational spread {spread_deg:.3}° exceeds {limit_deg}°")]
    InconsistentViews { spread_deg: f64, limit_deg: f64 },
    #[error("view {view}: {message}")]
    BadView { view: usize, message: String },
}

/// One calibration view: planar board points (board frame, Z = 0) with
/// their observed camera pixels, optionally augmented with transferred
/// projector pixels and the decoded correspondence map of the view.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationView {
    pub board_points: Vec<[f64; 2]>,
    pub image_points: Vec<PixelPoint>,
    pub projector_points: Option<Vec<PixelPoint>>,
    pub correspondence: Option<CorrespondenceMap>,
}

impl CalibrationView {
    pub fn new(board_points: Vec<[f64; 2]>, image_points: Vec<PixelPoint>) -> Self {
        Self {
            board_points,
            image_points,
            projector_points: None,
            correspondence: None,
        }
    }

    fn check(&self, index: usize) -> Result<(), CalibrationError> {
        if self.board_points.len() != self.image_points.len() {
            return Err(CalibrationError::BadView {
                view: index,
                message: format!(
                    "{} board points vs {} image points",
                    self.board_points.len(),
                    self.image_points.len()
                ),
            });
        }
        if self.board_points.len() < 4 {
            return Err(CalibrationError::BadView {
                view: index,
                message: "fewer than 4 corners".into(),
            });
        }
        Ok(())
    }
}

/// Calibration output: the refined model, one board pose per view, and the
/// RMS reprojection error over all corners.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub model: CameraModel,
    pub poses: Vec<RigidTransform>,
    pub rms_reprojection: f64,
}

/// Full single-device pipeline: homographies → closed-form intrinsics →
/// per-view extrinsics → refinement.
pub fn calibrate_camera(
    views: &[CalibrationView],
    image_size: (u32, u32),
    estimate_distortion: bool,
) -> Result<CalibrationResult, CalibrationError> {
    let mut homographies = Vec::with_capacity(views.len());
    for (i, view) in views.iter().enumerate() {
        view.check(i)?;
        let dst: Vec<[f64; 2]> = view.image_points.iter().map(|p| [p.u, p.v]).collect();
        homographies.push(estimate_homography(&view.board_points, &dst)?);
    }
    let model = zhang_intrinsics(&homographies, image_size)?;
    let poses: Vec<RigidTransform> = homographies
        .iter()
        .map(|h| zhang_extrinsics(&model, h))
        .collect();
    let rms = reprojection_error(views, &model, &poses)?.rms;
    let initial = CalibrationResult {
        model,
        poses,
        rms_reprojection: rms,
    };
    refine_calibration(views, &initial, estimate_distortion)
}

/// Regular grid of board corners (board frame, Z = 0), `cols × rows` at the
/// given spacing. Shared fixture for synthetic calibration targets.
pub fn board_grid(cols: usize, rows: usize, spacing: f64) -> Vec<[f64; 2]> {
    let mut points = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            points.push([c as f64 * spacing, r as f64 * spacing]);
        }
    }
    points
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::geometry::{CameraModel, Mat3, RigidTransform, Vec3};

    pub fn table_8_1_model() -> CameraModel {
        CameraModel::new(1440.38101, 1437.11605, 667.836875, 354.202552, 1280, 720).unwrap()
    }

    pub fn table_8_3_model() -> CameraModel {
        CameraModel::new(4618.96471, 4347.10132, 744.248184, 605.056615, 1920, 1080).unwrap()
    }

    /// H = K [r1 r2 t] built by direct multiplication, independent of the
    /// DLT estimator.
    pub fn homography_from_pose(model: &CameraModel, pose: &RigidTransform) -> Mat3 {
        let k = model.intrinsic_matrix();
        let h = k * Mat3::from_columns(&[
            pose.rotation.column(0).into_owned(),
            pose.rotation.column(1).into_owned(),
            pose.translation,
        ]);
        h / h[(2, 2)]
    }

    /// Distinct tilted board orientations in front of the camera.
    pub fn synthetic_poses(count: usize) -> Vec<RigidTransform> {
        let tilts = [
            (0.25, 0.1, 0.05),
            (-0.2, 0.3, -0.1),
            (0.1, -0.35, 0.2),
            (0.35, 0.2, -0.25),
            (-0.3, -0.15, 0.1),
            (0.15, 0.25, 0.3),
            (-0.1, 0.15, -0.3),
            (0.3, -0.2, 0.15),
        ];
        (0..count)
            .map(|i| {
                let (a, b, c) = tilts[i % tilts.len()];
                let r = Mat3::from(nalgebra::Rotation3::from_euler_angles(a, b, c));
                let t = Vec3::new(
                    -60.0 + 17.0 * i as f64,
                    -40.0 + 9.0 * i as f64,
                    850.0 + 60.0 * i as f64,
                );
                RigidTransform::new(r, t).unwrap()
            })
            .collect()
    }
}
