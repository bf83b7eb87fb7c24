//! Linear triangulation: projection matrices and homogeneous least-squares
//! recovery of 3D points from camera–projector correspondences.
//!
//! The world frame is the camera frame, so `P_cam = K_cam [I | 0]` and
//! `P_proj = K_proj [R | t]` with `(R, t)` the camera→projector transform.
//! Pixels are undistorted before the linear system is assembled.

use crate::cloud::PointCloud;
use crate::codec::CorrespondenceMap;
use crate::geometry::{
    project, CameraModel, GeometryError, PixelPoint, RigidTransform, Vec3, WorldPoint,
};
use nalgebra::{Matrix3x4, Matrix4, RowVector4, Vector4};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TriangulationError {
    #[error("rays are parallel or the system is degenerate")]
    DegenerateRays,
    #[error("correspondence map decodes neither projector axis")]
    MissingAxis,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A 3×4 projection matrix `P = K [R | t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionMatrix(pub Matrix3x4<f64>);

impl ProjectionMatrix {
    pub fn row(&self, i: usize) -> RowVector4<f64> {
        self.0.row(i).into_owned()
    }

    /// Projective depth of a world point: the third coordinate of `P·(X,1)`.
    /// Equals `z_cam` when `P = K[R|t]` with a normalized K.
    pub fn depth(&self, x: &WorldPoint) -> f64 {
        let h = Vector4::new(x.x, x.y, x.z, 1.0);
        (self.0 * h)[2]
    }
}

/// Builds `P = K [R | t]`. Distortion is not part of P; undistort pixels
/// before using it.
pub fn build_projection(model: &CameraModel, pose: &RigidTransform) -> ProjectionMatrix {
    let k = model.intrinsic_matrix();
    let mut rt = Matrix3x4::zeros();
    rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&pose.rotation);
    rt.fixed_view_mut::<3, 1>(0, 3).copy_from(&pose.translation);
    ProjectionMatrix(k * rt)
}

/// Result of a single linear triangulation.
#[derive(Debug, Clone, Copy)]
pub struct Triangulated {
    pub point: WorldPoint,
    /// Smallest singular value of the (row-normalized) 4×4 system.
    pub residual: f64,
    pub depth_cam: f64,
    pub depth_proj: f64,
    /// False when the point fell behind either device (cheirality warning).
    pub cheirality_ok: bool,
}

/// Triangulates one correspondence by SVD of the two-rows-per-device
/// homogeneous system. The third cross-product row of each device is
/// dropped as linearly dependent; the four kept rows are scaled to unit
/// norm for conditioning. The solution is the right singular vector of the
/// smallest singular value.
pub fn triangulate_point(
    p_cam: &ProjectionMatrix,
    p_proj: &ProjectionMatrix,
    x_cam: PixelPoint,
    x_proj: PixelPoint,
) -> Result<Triangulated, TriangulationError> {
    let rows = [
        x_cam.v * p_cam.row(2) - p_cam.row(1),
        p_cam.row(0) - x_cam.u * p_cam.row(2),
        x_proj.v * p_proj.row(2) - p_proj.row(1),
        p_proj.row(0) - x_proj.u * p_proj.row(2),
    ];
    let mut a = Matrix4::zeros();
    for (i, row) in rows.iter().enumerate() {
        let norm = row.norm();
        if norm > 0.0 {
            a.set_row(i, &(row / norm));
        }
    }

    let svd = a.svd(true, true);
    let mut order: [usize; 4] = [0, 1, 2, 3];
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
    });
    let sigma_max = svd.singular_values[order[0]];
    let sigma_third = svd.singular_values[order[2]];
    let residual = svd.singular_values[order[3]];
    if sigma_third <= 1e-12 * sigma_max {
        return Err(TriangulationError::DegenerateRays);
    }
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let h = v_t.row(order[3]);
    let w = h[3];
    if w.abs() <= 1e-12 * (h[0].abs() + h[1].abs() + h[2].abs()) {
        return Err(TriangulationError::DegenerateRays);
    }
    let point = WorldPoint::new(h[0] / w, h[1] / w, h[2] / w);

    let depth_cam = p_cam.depth(&point);
    let depth_proj = p_proj.depth(&point);
    Ok(Triangulated {
        point,
        residual,
        depth_cam,
        depth_proj,
        cheirality_ok: depth_cam > 0.0 && depth_proj > 0.0,
    })
}

/// A calibrated camera–projector scanning rig, camera frame = world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRig {
    pub camera: CameraModel,
    pub projector: CameraModel,
    /// Camera→projector rigid transform.
    pub cam_to_proj: RigidTransform,
}

impl ScanRig {
    pub fn projection_matrices(&self) -> (ProjectionMatrix, ProjectionMatrix) {
        (
            build_projection(&self.camera, &RigidTransform::identity()),
            build_projection(&self.projector, &self.cam_to_proj),
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TriangulateOptions {
    /// Points reprojecting farther than this (pixels) in either device are
    /// dropped.
    pub max_reprojection_px: f64,
}

impl Default for TriangulateOptions {
    fn default() -> Self {
        Self {
            max_reprojection_px: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TriangulateStats {
    pub valid_pixels: usize,
    pub emitted: usize,
    pub dropped_cheirality: usize,
    pub dropped_residual: usize,
    pub dropped_degenerate: usize,
}

enum PixelOutcome {
    Point(WorldPoint, [u32; 2]),
    Cheirality,
    Residual,
    Degenerate,
}

/// Triangulates every valid pixel of a correspondence map into a point
/// cloud with per-point source-pixel provenance, in row-major pixel order.
///
/// With both projector axes decoded each pixel is a full 2D correspondence.
/// With a single axis the camera ray is intersected with the projector
/// column (or row) plane; the projector is treated as distortion-free in
/// that mode. Points behind either device or reprojecting worse than
/// `max_reprojection_px` are dropped and counted.
pub fn triangulate_map(
    corr: &CorrespondenceMap,
    rig: &ScanRig,
    options: &TriangulateOptions,
) -> Result<(PointCloud, TriangulateStats), TriangulationError> {
    if !corr.has_x && !corr.has_y {
        return Err(TriangulationError::MissingAxis);
    }
    let (p_cam, p_proj) = rig.projection_matrices();
    let both_axes = corr.has_x && corr.has_y;

    let rows: Vec<Vec<PixelOutcome>> = (0..corr.height)
        .into_par_iter()
        .map(|row| {
            let mut out = Vec::new();
            for col in 0..corr.width {
                let i = row * corr.width + col;
                if !corr.is_valid(col, row) {
                    continue;
                }
                out.push(triangulate_pixel(
                    rig,
                    &p_cam,
                    &p_proj,
                    PixelPoint::new(col as f64 + 0.5, row as f64 + 0.5),
                    corr.proj_x[i],
                    corr.proj_y[i],
                    corr.has_x,
                    both_axes,
                    options,
                    [col as u32, row as u32],
                ));
            }
            out
        })
        .collect();

    let mut stats = TriangulateStats {
        valid_pixels: corr.valid_count(),
        ..Default::default()
    };
    let mut points = Vec::new();
    let mut provenance = Vec::new();
    for outcome in rows.into_iter().flatten() {
        match outcome {
            PixelOutcome::Point(p, src) => {
                points.push(p);
                provenance.push(src);
                stats.emitted += 1;
            }
            PixelOutcome::Cheirality => stats.dropped_cheirality += 1,
            PixelOutcome::Residual => stats.dropped_residual += 1,
            PixelOutcome::Degenerate => stats.dropped_degenerate += 1,
        }
    }
    let cloud = PointCloud::new(points)
        .with_provenance(provenance)
        .expect("counts match by construction");
    Ok((cloud, stats))
}

#[allow(clippy::too_many_arguments)]
fn triangulate_pixel(
    rig: &ScanRig,
    p_cam: &ProjectionMatrix,
    p_proj: &ProjectionMatrix,
    cam_px: PixelPoint,
    proj_x: f64,
    proj_y: f64,
    has_x: bool,
    both_axes: bool,
    options: &TriangulateOptions,
    source: [u32; 2],
) -> PixelOutcome {
    let Ok(cam_ideal) = rig.camera.undistort_pixel(cam_px) else {
        return PixelOutcome::Degenerate;
    };

    let (point, depth_cam, depth_proj) = if both_axes {
        let proj_px = PixelPoint::new(proj_x, proj_y);
        let Ok(proj_ideal) = rig.projector.undistort_pixel(proj_px) else {
            return PixelOutcome::Degenerate;
        };
        match triangulate_point(p_cam, p_proj, cam_ideal, proj_ideal) {
            Ok(t) => (t.point, t.depth_cam, t.depth_proj),
            Err(_) => return PixelOutcome::Degenerate,
        }
    } else {
        // Ray–plane: intersect the camera ray with the projector
        // column/row plane π = P_projᵀ·l.
        let l = if has_x {
            nalgebra::Vector3::new(1.0, 0.0, -proj_x)
        } else {
            nalgebra::Vector3::new(0.0, 1.0, -proj_y)
        };
        let plane = p_proj.0.transpose() * l;
        let (xn, yn) = match rig.camera.pixel_to_normalized(cam_ideal) {
            Ok(n) => n,
            Err(_) => return PixelOutcome::Degenerate,
        };
        let dir = Vec3::new(xn, yn, 1.0);
        let denom = plane[0] * dir[0] + plane[1] * dir[1] + plane[2] * dir[2];
        if denom.abs() < 1e-15 {
            return PixelOutcome::Degenerate;
        }
        let s = -plane[3] / denom;
        let point = WorldPoint::from(dir * s);
        (point, s, p_proj.depth(&point))
    };

    if depth_cam <= 0.0 || depth_proj <= 0.0 {
        return PixelOutcome::Cheirality;
    }

    // Gate on reprojection into both devices, this time with distortion.
    let Ok((cam_reproj, _)) = project(&rig.camera, &RigidTransform::identity(), &point) else {
        return PixelOutcome::Cheirality;
    };
    let Ok((proj_reproj, _)) = project(&rig.projector, &rig.cam_to_proj, &point) else {
        return PixelOutcome::Cheirality;
    };
    let cam_err = cam_reproj.distance_to(&cam_px);
    let proj_err = if both_axes {
        proj_reproj.distance_to(&PixelPoint::new(proj_x, proj_y))
    } else if has_x {
        (proj_reproj.u - proj_x).abs()
    } else {
        (proj_reproj.v - proj_y).abs()
    };
    if cam_err > options.max_reprojection_px || proj_err > options.max_reprojection_px {
        return PixelOutcome::Residual;
    }
    PixelOutcome::Point(point, source)
}
