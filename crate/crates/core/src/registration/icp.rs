//! The ICP loop and turntable sequence stitching.

use super::correspond::{
    correspond_closest_indexed, correspond_normal_shoot_indexed, correspond_projective, Pairs,
    ProjectiveRig,
};
use super::{
    error_point_plane, error_point_point, rigid_from_correspondences, CorrespondenceMode,
    ErrorMetric, KdTree3, RegistrationError,
};
use crate::cloud::PointCloud;
use crate::geometry::{RigidTransform, Vec3, WorldPoint};
use nalgebra::Unit;
use std::collections::HashSet;

#[derive(Debug, Clone, PartialEq)]
pub struct IcpParams {
    pub correspondence_mode: CorrespondenceMode,
    pub max_iterations: usize,
    /// Terminate when the error metric drops below this (scene units²).
    pub error_tolerance: f64,
    pub error_metric: ErrorMetric,
    /// Pairs farther than this are rejected; `None` means 10% of the
    /// target's bounding-box diagonal.
    pub max_pair_distance: Option<f64>,
    /// Required for [`CorrespondenceMode::Projective`].
    pub projective_rig: Option<ProjectiveRig>,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            correspondence_mode: CorrespondenceMode::ClosestPoint,
            max_iterations: 50,
            error_tolerance: 1e-8,
            error_metric: ErrorMetric::PointPoint,
            max_pair_distance: None,
            projective_rig: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpReport {
    /// Source→target rigid transform.
    pub transform: RigidTransform,
    /// Error metric value after each iteration's update.
    pub error_trace: Vec<f64>,
    pub pair_counts: Vec<usize>,
    pub iterations: usize,
    /// True when terminated by tolerance or stagnation rather than the
    /// iteration cap.
    pub converged: bool,
}

const RELATIVE_CHANGE_TOLERANCE: f64 = 1e-10;

/// Iterative closest point: starting from the identity, alternate
/// correspondence estimation (per `params.correspondence_mode`) with the
/// closed-form point-point rigid fit, accumulating the transform. The
/// selected error metric drives the trace and termination; the minimizing
/// step is always the point-point closed form.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    params: &IcpParams,
) -> Result<IcpReport, RegistrationError> {
    let max_dist = params
        .max_pair_distance
        .unwrap_or_else(|| 0.1 * target.bounding_box_diagonal());
    let target_tree = KdTree3::build(&target.points);
    let target_normals = target.normals.as_deref();

    let mut transform = RigidTransform::identity();
    let mut error_trace = Vec::new();
    let mut pair_counts = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..params.max_iterations {
        iterations = iter + 1;
        let moved = source.transformed(&transform);
        let pairs: Pairs = match params.correspondence_mode {
            CorrespondenceMode::ClosestPoint => {
                correspond_closest_indexed(&moved, &target_tree, max_dist)
            }
            CorrespondenceMode::NormalShooting => {
                correspond_normal_shoot_indexed(&moved, &target_tree, max_dist)?
            }
            CorrespondenceMode::Projective => {
                let rig = params
                    .projective_rig
                    .as_ref()
                    .ok_or(RegistrationError::MissingRig)?;
                correspond_projective(&moved, target, rig, max_dist)?
            }
        };
        if pairs.is_empty() {
            return Err(RegistrationError::NoCorrespondences { iteration: iter });
        }

        let (x, p): (Vec<WorldPoint>, Vec<WorldPoint>) = pairs
            .iter()
            .map(|(si, ti)| (target.points[*ti], moved.points[*si]))
            .unzip();
        let delta = rigid_from_correspondences(&x, &p)?;
        transform = delta.compose(&transform);

        let error = match params.error_metric {
            ErrorMetric::PointPoint => {
                error_point_point(&source.points, &target.points, &pairs, &transform)?
            }
            ErrorMetric::PointPlane => {
                let normals = target_normals.ok_or(RegistrationError::MissingNormals)?;
                error_point_plane(&source.points, &target.points, normals, &pairs, &transform)?
            }
        };
        error_trace.push(error);
        pair_counts.push(pairs.len());

        if error < params.error_tolerance {
            converged = true;
            break;
        }
        if error_trace.len() >= 2 {
            let prev = error_trace[error_trace.len() - 2];
            if (prev - error).abs() <= RELATIVE_CHANGE_TOLERANCE * prev.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }

    Ok(IcpReport {
        transform,
        error_trace,
        pair_counts,
        iterations,
        converged,
    })
}

/// How stitching seeds each pairwise ICP when no explicit guesses are
/// given.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedMode {
    Identity,
    /// Nominal turntable step: rotation of `step_deg` about `axis` through
    /// the target cloud's centroid, matching the simulated turntable's
    /// sense (the transform mapping a view into the previous view's frame).
    Turntable { axis: Unit<Vec3>, step_deg: f64 },
}

/// Voxel deduplication of the merged cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StitchVoxel {
    /// 0.5% of the merged bounding-box diagonal.
    Auto,
    Size(f64),
    Off,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StitchParams {
    pub icp: IcpParams,
    pub seed: SeedMode,
    pub voxel: StitchVoxel,
}

impl Default for StitchParams {
    fn default() -> Self {
        Self {
            icp: IcpParams::default(),
            seed: SeedMode::Identity,
            voxel: StitchVoxel::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StitchReport {
    /// All clouds mapped into the first cloud's frame and concatenated
    /// (optionally voxel-deduplicated).
    pub merged: PointCloud,
    /// `step_transforms[i]` maps cloud `i+1` into cloud `i`'s frame.
    pub step_transforms: Vec<RigidTransform>,
    /// `cumulative[i]` maps cloud `i` into cloud 0's frame; entry 0 is the
    /// identity.
    pub cumulative: Vec<RigidTransform>,
    pub icp_reports: Vec<IcpReport>,
}

/// Registers consecutive clouds pairwise (seeded per `params.seed` or the
/// explicit `init_guesses`, one per step) and merges everything into the
/// first cloud's frame.
pub fn stitch_sequence(
    clouds: &[PointCloud],
    init_guesses: Option<&[RigidTransform]>,
    params: &StitchParams,
) -> Result<StitchReport, RegistrationError> {
    let mut step_transforms = Vec::new();
    let mut icp_reports = Vec::new();
    let mut cumulative = vec![RigidTransform::identity()];

    for i in 1..clouds.len() {
        let target = &clouds[i - 1];
        let seed = match init_guesses {
            Some(guesses) => guesses.get(i - 1).copied().unwrap_or_else(RigidTransform::identity),
            None => match &params.seed {
                SeedMode::Identity => RigidTransform::identity(),
                SeedMode::Turntable { axis, step_deg } => {
                    let center = target.centroid().unwrap_or(WorldPoint::origin());
                    RigidTransform::rotation_about_point(
                        *axis,
                        -step_deg.to_radians(),
                        &center,
                    )
                }
            },
        };
        let seeded = clouds[i].transformed(&seed);
        let report = icp(&seeded, target, &params.icp).map_err(|e| {
            RegistrationError::StepFailed {
                index: i,
                source: Box::new(e),
            }
        })?;
        let step = report.transform.compose(&seed);
        cumulative.push(cumulative[i - 1].compose(&step));
        step_transforms.push(step);
        icp_reports.push(report);
    }

    let mut merged = PointCloud::default();
    for (cloud, t) in clouds.iter().zip(&cumulative) {
        merged.extend(&cloud.transformed(t));
    }
    let voxel = match params.voxel {
        StitchVoxel::Off => None,
        StitchVoxel::Size(s) => Some(s),
        StitchVoxel::Auto => Some(0.005 * merged.bounding_box_diagonal()),
    };
    if let Some(voxel) = voxel.filter(|v| *v > 0.0) {
        merged = voxel_deduplicate(&merged, voxel);
    }

    Ok(StitchReport {
        merged,
        step_transforms,
        cumulative,
        icp_reports,
    })
}

/// Keeps the first point (in order) of every occupied voxel.
fn voxel_deduplicate(cloud: &PointCloud, voxel: f64) -> PointCloud {
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut normals = cloud.normals.as_ref().map(|_| Vec::new());
    let mut provenance = cloud.provenance.as_ref().map(|_| Vec::new());
    for (i, p) in cloud.points.iter().enumerate() {
        let key = (
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        );
        if seen.insert(key) {
            points.push(*p);
            if let (Some(out), Some(ns)) = (&mut normals, &cloud.normals) {
                out.push(ns[i]);
            }
            if let (Some(out), Some(ps)) = (&mut provenance, &cloud.provenance) {
                out.push(ps[i]);
            }
        }
    }
    PointCloud {
        points,
        normals,
        provenance,
    }
}
