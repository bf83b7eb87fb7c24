//! Correspondence estimation: closest point, normal shooting, projective
//! data association, plus PCA normal estimation.

use super::{KdTree3, RegistrationError};
use crate::cloud::PointCloud;
use crate::geometry::{project, CameraModel, Mat3, RigidTransform, Vec3, WorldPoint};
use rayon::prelude::*;

/// `(source index, target index)` pairs.
pub type Pairs = Vec<(usize, usize)>;

/// Camera used by projective association: `pose` maps cloud coordinates
/// into that camera's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveRig {
    pub camera: CameraModel,
    pub pose: RigidTransform,
}

/// Pairs every source point with its Euclidean-nearest target point (k-d
/// tree, ties to the lowest target index); pairs farther apart than
/// `max_pair_distance` are discarded.
pub fn correspond_closest(
    source: &PointCloud,
    target: &PointCloud,
    max_pair_distance: f64,
) -> Pairs {
    correspond_closest_indexed(source, &KdTree3::build(&target.points), max_pair_distance)
}

pub(crate) fn correspond_closest_indexed(
    source: &PointCloud,
    target_tree: &KdTree3,
    max_pair_distance: f64,
) -> Pairs {
    let limit = max_pair_distance * max_pair_distance;
    source
        .points
        .par_iter()
        .enumerate()
        .filter_map(|(si, p)| {
            let (ti, d2) = target_tree.nearest(p)?;
            (d2 <= limit).then_some((si, ti))
        })
        .collect()
}

/// Pairs every source point with the target point closest to the line
/// through it along its normal; accepted when the perpendicular distance is
/// below `max_pair_distance`.
pub fn correspond_normal_shoot(
    source: &PointCloud,
    target: &PointCloud,
    max_pair_distance: f64,
) -> Result<Pairs, RegistrationError> {
    correspond_normal_shoot_indexed(source, &KdTree3::build(&target.points), max_pair_distance)
}

pub(crate) fn correspond_normal_shoot_indexed(
    source: &PointCloud,
    target_tree: &KdTree3,
    max_pair_distance: f64,
) -> Result<Pairs, RegistrationError> {
    let normals = source
        .normals
        .as_ref()
        .ok_or(RegistrationError::MissingNormals)?;
    let limit = max_pair_distance * max_pair_distance;
    Ok(source
        .points
        .par_iter()
        .zip(normals.par_iter())
        .enumerate()
        .filter_map(|(si, (p, n))| {
            let (ti, d2) = target_tree.nearest_to_line(p, n)?;
            (d2 <= limit).then_some((si, ti))
        })
        .collect())
}

/// Pairs each source point with the target point stored at the camera
/// pixel it projects to — no search. The target must carry per-pixel
/// provenance. Source points behind the camera, landing on empty pixels,
/// or farther than `max_pair_distance` in 3D stay unpaired.
pub fn correspond_projective(
    source: &PointCloud,
    target: &PointCloud,
    rig: &ProjectiveRig,
    max_pair_distance: f64,
) -> Result<Pairs, RegistrationError> {
    let provenance = target
        .provenance
        .as_ref()
        .ok_or(RegistrationError::MissingProvenance)?;
    let (w, h) = (
        rig.camera.image_width as usize,
        rig.camera.image_height as usize,
    );
    let mut pixel_index = vec![u32::MAX; w * h];
    for (ti, src) in provenance.iter().enumerate() {
        let (c, r) = (src[0] as usize, src[1] as usize);
        if c < w && r < h {
            let slot = &mut pixel_index[r * w + c];
            // First point wins; provenance rarely collides.
            if *slot == u32::MAX {
                *slot = ti as u32;
            }
        }
    }

    let limit = max_pair_distance * max_pair_distance;
    Ok(source
        .points
        .par_iter()
        .enumerate()
        .filter_map(|(si, p)| {
            let (px, _) = project(&rig.camera, &rig.pose, p).ok()?;
            let (c, r) = (px.u.floor(), px.v.floor());
            if c < 0.0 || r < 0.0 || c >= w as f64 || r >= h as f64 {
                return None;
            }
            let ti = pixel_index[r as usize * w + c as usize];
            if ti == u32::MAX {
                return None;
            }
            let ti = ti as usize;
            ((target.points[ti] - p).norm_squared() <= limit).then_some((si, ti))
        })
        .collect())
}

/// Estimates per-point unit normals by PCA over each point's k nearest
/// neighbors (the point included): the normal is the eigenvector of the
/// smallest covariance eigenvalue, oriented toward `viewpoint`.
pub fn estimate_normals(
    cloud: &PointCloud,
    k: usize,
    viewpoint: WorldPoint,
) -> Result<PointCloud, RegistrationError> {
    if k < 3 || cloud.len() <= k {
        return Err(RegistrationError::TooFewPoints {
            points: cloud.len(),
            k,
        });
    }
    let tree = KdTree3::build(&cloud.points);
    let normals: Vec<Vec3> = cloud
        .points
        .par_iter()
        .map(|p| {
            let neighbors = tree.k_nearest(p, k);
            let mean = neighbors
                .iter()
                .fold(Vec3::zeros(), |a, (i, _)| a + cloud.points[*i].coords)
                / neighbors.len() as f64;
            let mut cov = Mat3::zeros();
            for (i, _) in &neighbors {
                let d = cloud.points[*i].coords - mean;
                cov += d * d.transpose();
            }
            let eig = cov.symmetric_eigen();
            let mut min_idx = 0;
            for i in 1..3 {
                if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
                    min_idx = i;
                }
            }
            let mut n = eig.eigenvectors.column(min_idx).into_owned();
            let norm = n.norm();
            if norm > 0.0 {
                n /= norm;
            } else {
                n = Vec3::z();
            }
            if n.dot(&(viewpoint - p)) < 0.0 {
                n = -n;
            }
            n
        })
        .collect();
    let mut out = cloud.clone();
    out.normals = Some(normals);
    Ok(out)
}
