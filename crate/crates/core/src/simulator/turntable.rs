//! Turntable view sequences with exact inter-view transforms.

use super::{ground_truth, Rig, Surface};
use crate::cloud::PointCloud;
use crate::geometry::{RigidTransform, Vec3, WorldPoint};
use nalgebra::Unit;

/// Rotation axis of the turntable, in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurntableAxis {
    pub point: WorldPoint,
    pub direction: Unit<Vec3>,
}

/// One simulated turntable stop.
#[derive(Debug, Clone)]
pub struct TurntableView {
    /// The surface in this view's orientation; render pattern stacks from
    /// it on demand.
    pub surface: Surface,
    pub angle_deg: f64,
    /// Ground-truth cloud (camera frame) with normals and provenance.
    pub cloud: PointCloud,
    /// Exact transform (camera frame) taking this view's cloud into the
    /// previous view's frame. Entry 0 closes the loop when the sweep spans
    /// a full turn, and is the identity otherwise.
    pub step_to_previous: RigidTransform,
}

/// Simulates `steps` turntable stops of `step_angle_deg` each: the surface
/// is rotated about `axis` per stop and ground truth is rendered from the
/// fixed rig. `steps · step_angle_deg` must not exceed 360.
pub fn turntable_views(
    rig: &Rig,
    surface: &Surface,
    steps: usize,
    step_angle_deg: f64,
    axis: TurntableAxis,
) -> Vec<TurntableView> {
    assert!(
        steps as f64 * step_angle_deg <= 360.0 + 1e-9,
        "sweep exceeds a full turn"
    );
    let full_circle = (steps as f64 * step_angle_deg - 360.0).abs() < 1e-9;
    let step_world = RigidTransform::rotation_about_point(
        axis.direction,
        -step_angle_deg.to_radians(),
        &axis.point,
    );
    // Clouds live in the camera frame; conjugate the world-side step.
    let step_camera = rig
        .camera_pose
        .compose(&step_world.compose(&rig.camera_pose.invert()));

    (0..steps)
        .map(|i| {
            let angle_deg = i as f64 * step_angle_deg;
            let rotation = RigidTransform::rotation_about_point(
                axis.direction,
                angle_deg.to_radians(),
                &axis.point,
            );
            let view_surface = surface.transformed(&rotation);
            let cloud = ground_truth(rig, &view_surface).cloud(rig);
            let step_to_previous = if i > 0 || full_circle {
                step_camera
            } else {
                RigidTransform::identity()
            };
            TurntableView {
                surface: view_surface,
                angle_deg,
                cloud,
                step_to_previous,
            }
        })
        .collect()
}
